#include "featmap/tangent.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "featmap/parallel.hpp"

namespace featmap::tangent {

namespace {

// Deterministic sign convention: the entry of largest magnitude in each
// column is made nonnegative (first such entry wins ties).
void fix_column_signs(Matrix &basis) {
  for (Index c = 0; c < basis.cols(); ++c) {
    Index arg = 0;
    Scalar best = -1.0;
    for (Index r = 0; r < basis.rows(); ++r) {
      const Scalar a = std::abs(basis(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (basis(arg, c) < 0.0) basis.col(c) = -basis.col(c);
  }
}

} // namespace

Index estimate_intrinsic_dim(const Vector &singular_values, Scalar tau) {
  const Scalar total = singular_values.squaredNorm();
  if (total == 0.0) {
    throw DegenerateFrameError("estimate_intrinsic_dim: all-zero spectrum");
  }
  Scalar acc = 0.0;
  for (Index d = 0; d < singular_values.size(); ++d) {
    acc += singular_values[d] * singular_values[d];
    if (acc / total >= tau) return d + 1;
  }
  return singular_values.size();
}

TangentFrame local_frame(const RowMatrix &data,
                         const graph::SimilarityGraph &graph,
                         const graph::NeighborLists &neighbors, Index i,
                         Index d_max, Scalar tau) {
  const Index k = neighbors.k();
  const Index n = data.cols();

  Matrix centered(k, n);
  Vector w(k);
  for (Index c = 0; c < k; ++c) {
    const Index j = neighbors.indices(i, c);
    centered.row(c) = data.row(j) - data.row(i);
    w[c] = std::sqrt(graph.weight(i, j));
  }
  if (w.maxCoeff() == 0.0) {
    // Isolated point: fall back to uniform weights.
    w.setConstant(1.0 / std::sqrt(static_cast<Scalar>(k)));
  }
  centered.array().colwise() *= w.array();

  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) {
    throw DegenerateFrameError("local_frame: rank-0 neighborhood at point " +
                               std::to_string(i));
  }

  const Index cap = std::min({d_max, k, n});
  const Index d = std::min(estimate_intrinsic_dim(sv, tau), cap);

  TangentFrame frame;
  frame.point = i;
  frame.basis = svd.matrixV().leftCols(d);
  fix_column_signs(frame.basis);
  frame.singular_values = sv.head(d);
  return frame;
}

std::vector<TangentFrame> local_frames(const RowMatrix &data,
                                       const graph::SimilarityGraph &graph,
                                       const graph::NeighborLists &neighbors,
                                       Index d_max, Scalar tau, int threads) {
  const Index m = data.rows();
  std::vector<TangentFrame> frames(m);
  parallel_for(m, threads, [&](Index i) {
    frames[i] = local_frame(data, graph, neighbors, i, d_max, tau);
  });
  return frames;
}

Vector feature_importance(const TangentFrame &frame, Index d) {
  if (d < 1 || d > frame.dim()) {
    throw ParameterError("feature_importance: d out of range");
  }
  return frame.basis.leftCols(d).rowwise().norm();
}

RowMatrix importance_matrix(const std::vector<TangentFrame> &frames, Index n,
                            int threads) {
  const Index m = static_cast<Index>(frames.size());
  RowMatrix imp(m, n);
  parallel_for(m, threads, [&](Index i) {
    imp.row(i) = feature_importance(frames[i], frames[i].dim()).transpose();
  });
  return imp;
}

Index global_dim(const std::vector<TangentFrame> &frames, Index d_max) {
  std::vector<Index> dims;
  dims.reserve(frames.size());
  for (const auto &f : frames) dims.push_back(f.dim());
  std::sort(dims.begin(), dims.end());
  const Index median = dims[(dims.size() - 1) / 2];
  return std::max<Index>(1, std::min(d_max, median));
}

Matrix conform_basis(const TangentFrame &frame, Index d) {
  if (frame.dim() == d) return frame.basis;
  Matrix b = Matrix::Zero(frame.ambient_dim(), d);
  const Index copy = std::min(d, frame.dim());
  b.leftCols(copy) = frame.basis.leftCols(copy);
  return b;
}

Matrix optimal_alignment(const Matrix &basis_i, const Matrix &basis_j,
                         bool *degenerate) {
  if (basis_i.rows() != basis_j.rows() || basis_i.cols() != basis_j.cols()) {
    throw ParameterError("optimal_alignment: frame shapes differ");
  }
  const Matrix cross = basis_i.transpose() * basis_j;
  Eigen::JacobiSVD<Matrix> svd(cross,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (degenerate != nullptr) {
    const Vector &sv = svd.singularValues();
    *degenerate = sv.size() > 0 && sv[sv.size() - 1] <= 1e-12 * sv[0];
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

Alignment align_edge(const RowMatrix &data, const graph::SimilarityGraph &graph,
                     const std::vector<TangentFrame> &frames, Index i, Index j,
                     Index d) {
  if (!graph.has_edge(i, j)) {
    throw GraphError("align_edge: (" + std::to_string(i) + "," +
                     std::to_string(j) + ") is not a graph edge");
  }
  Alignment a;
  a.i = i;
  a.j = j;
  a.distance = (data.row(i) - data.row(j)).norm();
  a.rotation = optimal_alignment(conform_basis(frames[i], d),
                                 conform_basis(frames[j], d), &a.degenerate);
  return a;
}

Matrix parallel_transport(const Alignment &alignment, const Matrix &coords) {
  if (alignment.rotation.cols() != coords.rows()) {
    throw ParameterError("parallel_transport: coordinate dimension mismatch");
  }
  return (alignment.rotation * coords).array() + alignment.distance;
}

} // namespace featmap::tangent
