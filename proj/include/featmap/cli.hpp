#ifndef FEATMAP_CLI_HPP
#define FEATMAP_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "featmap/types.hpp"

namespace featmap {

// Flags shared by the embed / metrics / importance / render subcommands.
// Numeric defaults must stay in sync with projection::EmbedConfig.
struct RunConfig {
  std::string input;
  std::string output;
  std::string format = "csv";
  std::string label_column;  // empty means no label column
  Index k = 15;
  Index d_prime = 2;
  Index d_max = 8;
  Index epochs = 500;
  Index neg_samples = 5;
  Scalar q = 0.3;
  Scalar lambda = 0.5;
  Scalar min_dist = 0.1;
  Scalar tau = 0.9;
  std::uint64_t seed = 42;
  int threads = 1;
  Index focus = -1;  // render overlay point, -1 disables
};

// Driver behind the featmap binary. Returns the process exit code: 0 ok,
// 1 usage, 2 data, 3 numerical. FEATMAP_THREADS overrides --threads.
int run_cli(const std::vector<std::string> &args);
int run_cli(int argc, const char *const *argv);

} // namespace featmap

#endif
