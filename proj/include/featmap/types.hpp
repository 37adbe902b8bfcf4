#ifndef FEATMAP_TYPES_HPP
#define FEATMAP_TYPES_HPP

#include <Eigen/Dense>

namespace featmap {

using Scalar = double;
using Index = Eigen::Index;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Datasets and embeddings keep points as rows; row-major storage matches the
// on-disk layout of both the CSV and binary formats.
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix =
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Floor for squared radii before taking logs.
inline constexpr Scalar kRadiusEps = 1e-12;

} // namespace featmap

#endif
