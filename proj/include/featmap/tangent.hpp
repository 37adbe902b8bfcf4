#ifndef FEATMAP_TANGENT_HPP
#define FEATMAP_TANGENT_HPP

#include <cmath>
#include <vector>

#include "featmap/errors.hpp"
#include "featmap/knn_graph.hpp"
#include "featmap/types.hpp"

namespace featmap::tangent {

// Orthonormal basis of the local tangent space at one point, ordered by
// singular value, together with the local intrinsic dimension (the number of
// retained columns).
struct TangentFrame {
  Index point = -1;
  Matrix basis;            // n x d_i, orthonormal columns
  Vector singular_values;  // length d_i, nonincreasing, positive

  Index dim() const { return basis.cols(); }
  Index ambient_dim() const { return basis.rows(); }
};

// Orthogonal map relating two neighboring frames plus the local distance used
// as the translation part of the transport.
struct Alignment {
  Index i = -1, j = -1;
  Matrix rotation;     // d x d orthogonal
  Scalar distance = 0; // kNN edge length
  bool degenerate = false;
};

// Smallest d with sum_{l<=d} sv_l^2 / sum sv_l^2 >= tau.
Index estimate_intrinsic_dim(const Vector &singular_values, Scalar tau = 0.9);

TangentFrame local_frame(const RowMatrix &data,
                         const graph::SimilarityGraph &graph,
                         const graph::NeighborLists &neighbors, Index i,
                         Index d_max, Scalar tau = 0.9);

std::vector<TangentFrame> local_frames(const RowMatrix &data,
                                       const graph::SimilarityGraph &graph,
                                       const graph::NeighborLists &neighbors,
                                       Index d_max, Scalar tau = 0.9,
                                       int threads = 1);

// Row-wise l2 norms of the first d basis columns; per-feature variability of
// the local chart.
Vector feature_importance(const TangentFrame &frame, Index d);

// Importance for every point at its own local dimension, as an m x n matrix.
RowMatrix importance_matrix(const std::vector<TangentFrame> &frames, Index n,
                            int threads = 1);

// Shared frame dimension: min(d_max, median of local dims), at least 1.
Index global_dim(const std::vector<TangentFrame> &frames, Index d_max);

// Basis truncated or zero-padded to exactly d columns.
Matrix conform_basis(const TangentFrame &frame, Index d);

// Maximizer of tr(O^T M) over O(d) for the cross-Gram M = Vi^T Vj, via SVD.
// degenerate (when non-null) reports a rank-deficient cross-Gram, where the
// smallest singular direction of the rotation is arbitrary.
Matrix optimal_alignment(const Matrix &basis_i, const Matrix &basis_j,
                         bool *degenerate = nullptr);

// Alignment for a stored graph edge; throws GraphError when (i,j) is not an
// edge. Frames are conformed to dimension d before the Procrustes solve.
Alignment align_edge(const RowMatrix &data, const graph::SimilarityGraph &graph,
                     const std::vector<TangentFrame> &frames, Index i, Index j,
                     Index d);

// Rotation followed by broadcast addition of the edge length to every
// coordinate.
Matrix parallel_transport(const Alignment &alignment, const Matrix &coords);

// Frobenius cosine similarity between two frames. Zero-padded columns
// contribute nothing to either the inner product or the norms.
template <typename DerivedA, typename DerivedB>
Scalar consistence(const Eigen::MatrixBase<DerivedA> &basis_i,
                   const Eigen::MatrixBase<DerivedB> &basis_j) {
  const Scalar ni = basis_i.norm();
  const Scalar nj = basis_j.norm();
  if (ni == 0.0 || nj == 0.0) {
    throw DegenerateFrameError("consistence: zero-norm frame");
  }
  const Scalar c = basis_i.cwiseProduct(basis_j).sum() / (ni * nj);
  return std::clamp(c, Scalar{-1.0}, Scalar{1.0});
}

} // namespace featmap::tangent

#endif
