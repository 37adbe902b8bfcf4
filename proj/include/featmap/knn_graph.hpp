#ifndef FEATMAP_KNN_GRAPH_HPP
#define FEATMAP_KNN_GRAPH_HPP

#include <span>
#include <utility>
#include <vector>

#include "featmap/types.hpp"

namespace featmap::graph {

enum class Metric { euclidean };

// Exact k nearest neighbors per point, ascending distance, self excluded.
struct NeighborLists {
  IndexMatrix indices;  // m x k
  RowMatrix distances;  // m x k, nondecreasing per row

  Index size() const { return indices.rows(); }
  Index k() const { return indices.cols(); }
};

// Per-point adaptive length scales: nearest-neighbor distance and the
// calibrated decay gamma.
struct BandwidthParams {
  Vector nearest_dist;
  Vector gamma;
};

// Symmetric sparse weights on the union of directed kNN edges, stored both as
// CSR adjacency (every edge appears in both rows) and as a unique edge list.
struct SimilarityGraph {
  struct Edge {
    Index u, v;  // u < v
    Scalar weight;
  };

  Index num_points = 0;
  std::vector<Index> offsets;     // size m+1
  std::vector<Index> adjacency;   // sorted within each row
  std::vector<Scalar> weights;    // aligned with adjacency
  std::vector<Edge> edges;

  Index size() const { return num_points; }
  Index degree(Index i) const { return offsets[i + 1] - offsets[i]; }
  std::span<const Index> neighbors(Index i) const {
    return {adjacency.data() + offsets[i],
            static_cast<std::size_t>(degree(i))};
  }
  std::span<const Scalar> neighbor_weights(Index i) const {
    return {weights.data() + offsets[i], static_cast<std::size_t>(degree(i))};
  }
  bool has_edge(Index i, Index j) const;
  // 0 when (i,j) is not stored.
  Scalar weight(Index i, Index j) const;
};

NeighborLists build_knn(const RowMatrix &data, Index k,
                        Metric metric = Metric::euclidean, int threads = 1);

// Solves sum_j exp(-(d_j - d_0)/gamma) = log2(k) by bisection (tolerance
// 1e-5, at most 50 halvings). All-equal distance lists take gamma = 1.
// Returns (nearest distance, gamma).
std::pair<Scalar, Scalar> calibrate_bandwidth(
    Eigen::Ref<const Vector> distances);

BandwidthParams compute_bandwidths(const NeighborLists &neighbors,
                                   int threads = 1);

// Directed membership weights exp(-(d - dist_i)/gamma_i), aligned with the
// neighbor lists. The nearest neighbor of every point gets weight 1 exactly.
RowMatrix directed_weights(const NeighborLists &neighbors,
                           const BandwidthParams &bandwidth);

// Symmetrization a + b - ab over the union edge set; a missing direction
// contributes 0.
SimilarityGraph fuzzy_union(const IndexMatrix &indices,
                            const RowMatrix &directed);

// build_knn + calibration + directed weights + fuzzy union in one call.
struct KnnResult {
  NeighborLists neighbors;
  BandwidthParams bandwidth;
  SimilarityGraph graph;
};

KnnResult build_similarity_graph(const RowMatrix &data, Index k,
                                 int threads = 1);

} // namespace featmap::graph

#endif
