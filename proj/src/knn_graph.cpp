#include "featmap/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "featmap/errors.hpp"
#include "featmap/parallel.hpp"

namespace featmap::graph {

namespace {

constexpr int kMaxBisect = 50;
constexpr Scalar kBisectTol = 1e-5;
// Rescue scale when the bisection target is unattainable (many duplicate
// distances); mirrors the min_k_dist_scale convention of smooth-kNN code.
constexpr Scalar kMinGammaScale = 1e-3;

} // namespace

bool SimilarityGraph::has_edge(Index i, Index j) const {
  auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

Scalar SimilarityGraph::weight(Index i, Index j) const {
  auto row = neighbors(i);
  auto it = std::lower_bound(row.begin(), row.end(), j);
  if (it == row.end() || *it != j) return 0.0;
  return weights[offsets[i] + (it - row.begin())];
}

NeighborLists build_knn(const RowMatrix &data, Index k, Metric metric,
                        int threads) {
  (void)metric;  // euclidean is the only supported input metric
  const Index m = data.rows();
  if (k < 1 || k >= m) {
    throw ParameterError("build_knn: k must satisfy 1 <= k < m (k=" +
                         std::to_string(k) + ", m=" + std::to_string(m) + ")");
  }
  if (!data.allFinite()) {
    throw DataError("build_knn: input contains non-finite values");
  }

  NeighborLists out;
  out.indices.resize(m, k);
  out.distances.resize(m, k);

  const Vector sq_norms = data.rowwise().squaredNorm();

  parallel_for(m, threads, [&](Index i) {
    // ||x_i - x_j||^2 = ||x_i||^2 + ||x_j||^2 - 2 <x_i, x_j>
    Vector d2 = sq_norms.array() + sq_norms[i];
    d2.noalias() -= 2.0 * (data * data.row(i).transpose());
    d2 = d2.cwiseMax(0.0);

    std::vector<Index> order(m);
    std::iota(order.begin(), order.end(), Index{0});
    order.erase(order.begin() + i);
    // Ties broken by lower index.
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Index a, Index b) {
                        if (d2[a] != d2[b]) return d2[a] < d2[b];
                        return a < b;
                      });
    for (Index c = 0; c < k; ++c) {
      out.indices(i, c) = order[c];
      out.distances(i, c) = std::sqrt(d2[order[c]]);
    }
  });
  return out;
}

std::pair<Scalar, Scalar> calibrate_bandwidth(
    Eigen::Ref<const Vector> distances) {
  const Index k = distances.size();
  if (k == 0) throw ParameterError("calibrate_bandwidth: empty distance list");

  const Scalar rho = distances[0];
  if (distances[k - 1] - rho == 0.0) return {rho, 1.0};

  const Scalar target = std::log2(static_cast<Scalar>(k));
  auto decay_sum = [&](Scalar gamma) {
    Scalar s = 0.0;
    for (Index j = 0; j < k; ++j) s += std::exp(-(distances[j] - rho) / gamma);
    return s;
  };

  // decay_sum is increasing in gamma; expand the bracket, then bisect.
  Scalar lo = 0.0;
  Scalar hi = 1.0;
  for (int it = 0; it < 64 && decay_sum(hi) < target; ++it) hi *= 2.0;

  Scalar gamma = hi;
  Scalar best = hi;
  Scalar best_diff = std::numeric_limits<Scalar>::max();
  bool converged = false;
  for (int it = 0; it < kMaxBisect; ++it) {
    gamma = 0.5 * (lo + hi);
    const Scalar s = decay_sum(gamma);
    const Scalar diff = std::abs(s - target);
    if (diff < best_diff) {
      best_diff = diff;
      best = gamma;
    }
    if (diff < kBisectTol) {
      converged = true;
      break;
    }
    if (s > target) {
      hi = gamma;
    } else {
      lo = gamma;
    }
  }
  if (!converged) {
    gamma = std::max(best, kMinGammaScale * distances.mean());
  }
  return {rho, gamma};
}

BandwidthParams compute_bandwidths(const NeighborLists &neighbors,
                                   int threads) {
  const Index m = neighbors.size();
  BandwidthParams bw;
  bw.nearest_dist.resize(m);
  bw.gamma.resize(m);
  parallel_for(m, threads, [&](Index i) {
    auto [rho, gamma] =
        calibrate_bandwidth(neighbors.distances.row(i).transpose());
    bw.nearest_dist[i] = rho;
    bw.gamma[i] = gamma;
  });
  return bw;
}

RowMatrix directed_weights(const NeighborLists &neighbors,
                           const BandwidthParams &bandwidth) {
  const Index m = neighbors.size();
  const Index k = neighbors.k();
  RowMatrix w(m, k);
  for (Index i = 0; i < m; ++i) {
    const Scalar rho = bandwidth.nearest_dist[i];
    const Scalar gamma = bandwidth.gamma[i];
    for (Index c = 0; c < k; ++c) {
      Scalar v = std::exp(-(neighbors.distances(i, c) - rho) / gamma);
      if (v == 0.0) v = std::numeric_limits<Scalar>::min();
      w(i, c) = v;
    }
  }
  return w;
}

SimilarityGraph fuzzy_union(const IndexMatrix &indices,
                            const RowMatrix &directed) {
  const Index m = indices.rows();
  const Index k = indices.cols();

  // Accumulate both directions per unordered pair.
  std::unordered_map<std::uint64_t, std::pair<Scalar, Scalar>> pairs;
  pairs.reserve(static_cast<std::size_t>(m) * k);
  for (Index i = 0; i < m; ++i) {
    for (Index c = 0; c < k; ++c) {
      const Index j = indices(i, c);
      const Index u = std::min(i, j);
      const Index v = std::max(i, j);
      const std::uint64_t key =
          (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
      auto &slot = pairs[key];
      (i == u ? slot.first : slot.second) = directed(i, c);
    }
  }

  SimilarityGraph g;
  g.num_points = m;
  g.edges.reserve(pairs.size());
  for (const auto &[key, dirs] : pairs) {
    const Index u = static_cast<Index>(key >> 32);
    const Index v = static_cast<Index>(key & 0xffffffffULL);
    const Scalar w = dirs.first + dirs.second - dirs.first * dirs.second;
    g.edges.push_back({u, v, w});
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const auto &a, const auto &b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });

  g.offsets.assign(m + 1, 0);
  for (const auto &e : g.edges) {
    ++g.offsets[e.u + 1];
    ++g.offsets[e.v + 1];
  }
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.adjacency.resize(g.offsets[m]);
  g.weights.resize(g.offsets[m]);
  std::vector<Index> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto &e : g.edges) {
    g.adjacency[cursor[e.u]] = e.v;
    g.weights[cursor[e.u]++] = e.weight;
    g.adjacency[cursor[e.v]] = e.u;
    g.weights[cursor[e.v]++] = e.weight;
  }
  // Rows come out sorted because edges are sorted by (u, v) and v > u; the
  // entries written through the v cursor arrive in increasing u as well.
  return g;
}

KnnResult build_similarity_graph(const RowMatrix &data, Index k, int threads) {
  KnnResult r;
  r.neighbors = build_knn(data, k, Metric::euclidean, threads);
  r.bandwidth = compute_bandwidths(r.neighbors, threads);
  const RowMatrix directed = directed_weights(r.neighbors, r.bandwidth);
  r.graph = fuzzy_union(r.neighbors.indices, directed);
  return r;
}

} // namespace featmap::graph
