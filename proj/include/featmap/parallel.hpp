#ifndef FEATMAP_PARALLEL_HPP
#define FEATMAP_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "featmap/types.hpp"

namespace featmap {

// Chunked parallel map over [0, n). Each worker owns a disjoint index range,
// so results are identical for any thread count as long as the body writes
// only to slot i. threads <= 1 runs inline.
template <typename Body>
void parallel_for(Index n, int threads, const Body &body) {
  if (threads <= 1 || n < 2) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  const int workers = static_cast<int>(
      std::min<Index>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Index begin = static_cast<Index>(w) * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end]() {
      try {
        for (Index i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

} // namespace featmap

#endif
