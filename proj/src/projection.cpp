#include "featmap/projection.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "featmap/errors.hpp"
#include "featmap/parallel.hpp"

namespace featmap::projection {

namespace {

constexpr Scalar kGradClip = 4.0;
constexpr Index kShapeSamples = 300;
constexpr Scalar kShapeRange = 3.0;
constexpr Scalar kShapeResidualLimit = 1e-2;
constexpr Index kDenseEigenLimit = 512;
constexpr Scalar kInitSpread = 10.0;
constexpr Scalar kComponentGap = 3.0;  // in per-component max-abs-1 units
constexpr Scalar kLogFloor = 1e-12;

Scalar kernel(Scalar s, Scalar a, Scalar b) {  // s is a squared distance
  return 1.0 / (1.0 + a * std::pow(s, b));
}

Scalar clip(Scalar x) { return std::clamp(x, -kGradClip, kGradClip); }

// Sum of squared residuals of the kernel against the target curve.
Scalar shape_sse(const Vector &x, const Vector &target, Scalar a, Scalar b) {
  Scalar sse = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar r = kernel(x[i] * x[i], a, b) - target[i];
    sse += r * r;
  }
  return sse;
}

} // namespace

ShapeParams fit_shape_params(Scalar min_dist) {
  if (!(min_dist > 0.0)) {
    throw ParameterError("fit_shape_params: min_dist must be positive");
  }
  Vector x(kShapeSamples), target(kShapeSamples);
  for (Index i = 0; i < kShapeSamples; ++i) {
    x[i] = kShapeRange * static_cast<Scalar>(i + 1) / kShapeSamples;
    target[i] = x[i] <= min_dist ? 1.0 : std::exp(-(x[i] - min_dist));
  }

  // Levenberg-Marquardt on (a, b); the kernel takes squared distances, so the
  // curve evaluated at x is (1 + a x^2b)^-1.
  Scalar a = 1.0, b = 1.0;
  Scalar sse = shape_sse(x, target, a, b);
  Scalar damping = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    for (Index i = 0; i < kShapeSamples; ++i) {
      const Scalar p = std::pow(x[i], 2.0 * b);
      const Scalar den = 1.0 + a * p;
      const Scalar r = 1.0 / den - target[i];
      Eigen::Vector2d jac(-p / (den * den),
                          -2.0 * a * p * std::log(x[i]) / (den * den));
      hess += jac * jac.transpose();
      grad += r * jac;
    }
    if (grad.cwiseAbs().maxCoeff() < 1e-13) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::Matrix2d damped = hess;
      damped(0, 0) += damping * hess(0, 0);
      damped(1, 1) += damping * hess(1, 1);
      const Eigen::Vector2d step = damped.ldlt().solve(-grad);
      const Scalar a_try = std::max(a + step[0], 1e-8);
      const Scalar b_try = std::max(b + step[1], 1e-8);
      const Scalar sse_try = shape_sse(x, target, a_try, b_try);
      if (std::isfinite(sse_try) && sse_try < sse) {
        if (std::abs(a_try - a) + std::abs(b_try - b) < 1e-14) {
          a = a_try;
          b = b_try;
          sse = sse_try;
          iter = 200;
          break;
        }
        a = a_try;
        b = b_try;
        sse = sse_try;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        break;
      }
      damping *= 3.0;
    }
    if (!accepted) break;
  }

  ShapeParams shape;
  shape.a = a;
  shape.b = b;
  shape.min_dist = min_dist;
  shape.residual = sse / kShapeSamples;
  if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0 ||
      shape.residual >= kShapeResidualLimit) {
    throw ParameterError("fit_shape_params: calibration fit failed");
  }
  return shape;
}

namespace {

std::vector<std::vector<Index>> connected_components(
    const graph::SimilarityGraph &g) {
  const Index m = g.size();
  std::vector<Index> label(m, -1);
  std::vector<std::vector<Index>> comps;
  for (Index s = 0; s < m; ++s) {
    if (label[s] >= 0) continue;
    const Index c = static_cast<Index>(comps.size());
    std::vector<Index> order{s};
    label[s] = c;
    for (std::size_t h = 0; h < order.size(); ++h) {
      for (Index v : g.neighbors(order[h])) {
        if (label[v] < 0) {
          label[v] = c;
          order.push_back(v);
        }
      }
    }
    std::sort(order.begin(), order.end());
    comps.push_back(std::move(order));
  }
  return comps;
}

// Spectral coordinates of one connected component: the d' eigenvectors of the
// symmetric-normalized Laplacian after the trivial one, rescaled by
// deg^{-1/2} so they solve the generalized problem L x = lambda D x.
Matrix component_spectral(const graph::SimilarityGraph &g,
                          const std::vector<Index> &comp,
                          std::vector<Index> &local_of, Index d_prime,
                          Rng &rng) {
  const Index mc = static_cast<Index>(comp.size());
  Matrix coords = Matrix::Zero(mc, d_prime);
  if (mc == 1) return coords;
  for (Index t = 0; t < mc; ++t) local_of[comp[t]] = t;

  Vector deg = Vector::Zero(mc);
  for (Index t = 0; t < mc; ++t) {
    for (Scalar w : g.neighbor_weights(comp[t])) deg[t] += w;
  }
  if (deg.minCoeff() <= 0.0) {
    throw NumericalError("init_embedding: zero-degree vertex");
  }
  const Vector inv_sqrt_deg = deg.cwiseSqrt().cwiseInverse();
  const Index want = std::min<Index>(d_prime, mc - 1);

  Matrix vecs(mc, want);  // eigenvectors of L_sym, ascending, trivial skipped
  if (mc <= kDenseEigenLimit) {
    Matrix lap = Matrix::Identity(mc, mc);
    for (Index t = 0; t < mc; ++t) {
      const auto nbrs = g.neighbors(comp[t]);
      const auto wts = g.neighbor_weights(comp[t]);
      for (std::size_t c = 0; c < nbrs.size(); ++c) {
        const Index s = local_of[nbrs[c]];
        lap(t, s) -= wts[c] * inv_sqrt_deg[t] * inv_sqrt_deg[s];
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(lap);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("init_embedding: eigensolver failed");
    }
    vecs = solver.eigenvectors().middleCols(1, want);
  } else {
    // Orthogonal iteration on 2I - L_sym with the trivial direction deflated.
    Vector trivial = deg.cwiseSqrt();
    trivial.normalize();
    auto multiply = [&](const Matrix &in, Matrix &out) {
      out = in;  // the I part of I + D^{-1/2} W D^{-1/2}
      for (Index t = 0; t < mc; ++t) {
        const auto nbrs = g.neighbors(comp[t]);
        const auto wts = g.neighbor_weights(comp[t]);
        for (std::size_t c = 0; c < nbrs.size(); ++c) {
          const Index s = local_of[nbrs[c]];
          out.row(t) += wts[c] * inv_sqrt_deg[t] * inv_sqrt_deg[s] * in.row(s);
        }
      }
    };
    Matrix basis(mc, want), next(mc, want);
    for (Index t = 0; t < mc; ++t) {
      for (Index c = 0; c < want; ++c) basis(t, c) = rng.normal();
    }
    basis -= trivial * (trivial.transpose() * basis);
    {
      Eigen::HouseholderQR<Matrix> qr(basis);
      basis = qr.householderQ() * Matrix::Identity(mc, want);
    }
    Vector prev_ray = Vector::Zero(want);
    for (int it = 0; it < 500; ++it) {
      multiply(basis, next);
      next -= trivial * (trivial.transpose() * next);
      Eigen::HouseholderQR<Matrix> qr(next);
      basis = qr.householderQ() * Matrix::Identity(mc, want);
      if (it % 10 == 9) {
        multiply(basis, next);
        Vector ray(want);
        for (Index c = 0; c < want; ++c) ray[c] = basis.col(c).dot(next.col(c));
        if ((ray - prev_ray).cwiseAbs().maxCoeff() < 1e-7) break;
        prev_ray = ray;
      }
    }
    // Largest Rayleigh quotient of the shifted operator first, which is the
    // smallest nontrivial Laplacian eigenvalue.
    multiply(basis, next);
    std::vector<std::pair<Scalar, Index>> order(want);
    for (Index c = 0; c < want; ++c) {
      order[c] = {-basis.col(c).dot(next.col(c)), c};
    }
    std::sort(order.begin(), order.end());
    for (Index c = 0; c < want; ++c) vecs.col(c) = basis.col(order[c].second);
  }

  coords.leftCols(want) = inv_sqrt_deg.asDiagonal() * vecs;
  if (!coords.allFinite()) {
    throw NumericalError("init_embedding: non-finite spectral coordinates");
  }
  return coords;
}

} // namespace

Matrix init_embedding(const graph::SimilarityGraph &g, Index d_prime,
                      std::uint64_t seed) {
  if (d_prime < 1) {
    throw ParameterError("init_embedding: d_prime must be >= 1");
  }
  const Index m = g.size();
  Matrix y(m, d_prime);
  try {
    Rng rng(seed);
    const auto comps = connected_components(g);
    std::vector<Index> local_of(m, -1);
    for (std::size_t c = 0; c < comps.size(); ++c) {
      Matrix coords =
          component_spectral(g, comps[c], local_of, d_prime, rng);
      const Scalar span = coords.cwiseAbs().maxCoeff();
      if (span > 0.0) coords /= span;
      coords.array() += kComponentGap * static_cast<Scalar>(c);
      for (std::size_t t = 0; t < comps[c].size(); ++t) {
        y.row(comps[c][t]) = coords.row(static_cast<Index>(t));
      }
    }
    const Scalar span = y.cwiseAbs().maxCoeff();
    if (span > 0.0) y *= kInitSpread / span;
    return y;
  } catch (...) {
    Rng rng(seed);
    for (Index i = 0; i < m; ++i) {
      for (Index c = 0; c < d_prime; ++c) {
        y(i, c) = rng.uniform(-kInitSpread, kInitSpread);
      }
    }
    return y;
  }
}

RowMatrix original_radii(const std::vector<tangent::TangentFrame> &frames,
                         Index d_prime) {
  const Index m = static_cast<Index>(frames.size());
  if (m == 0) throw ParameterError("original_radii: no frames");
  if (d_prime < 1) throw ParameterError("original_radii: d_prime must be >= 1");
  RowMatrix r(m, d_prime);
  for (Index i = 0; i < m; ++i) {
    const Vector &sv = frames[i].singular_values;
    for (Index l = 0; l < d_prime; ++l) {
      const Scalar sigma2 = l < sv.size() ? sv[l] * sv[l] : 0.0;
      r(i, l) = std::log(std::max(sigma2, kRadiusEps));
    }
  }
  const Eigen::RowVectorXd mean = r.colwise().mean();
  r.rowwise() -= mean;
  return r;
}

namespace {

// Kernel-weighted squared projections onto point i's frame directions.
// Returns the clamped radius vector and writes the kernel mass to w_out.
Vector point_radii(const Matrix &y, const frames::FrameField &field,
                   const graph::SimilarityGraph &g, const ShapeParams &shape,
                   Index i, Scalar &w_out) {
  const Index dp = y.cols();
  Vector acc = Vector::Zero(dp);
  Scalar w = 0.0;
  for (Index j : g.neighbors(i)) {
    const Vector z = (y.row(j) - y.row(i)).transpose();
    const Scalar q = kernel(z.squaredNorm(), shape.a, shape.b);
    w += q;
    acc += q * (field.rotations[i].transpose() * z).cwiseAbs2();
  }
  w_out = w;
  if (w <= 0.0) return Vector::Constant(dp, kRadiusEps);
  return (acc / w).cwiseMax(kRadiusEps);
}

} // namespace

RowMatrix embedded_radii(const Matrix &Y, const frames::FrameField &field,
                         const graph::SimilarityGraph &g,
                         const ShapeParams &shape) {
  const Index m = Y.rows();
  if (field.size() != m || g.size() != m) {
    throw ParameterError("embedded_radii: size mismatch");
  }
  if (field.dim() != Y.cols()) {
    throw ParameterError("embedded_radii: frame dimension mismatch");
  }
  RowMatrix radii(m, Y.cols());
  for (Index i = 0; i < m; ++i) {
    Scalar w = 0.0;
    radii.row(i) = point_radii(Y, field, g, shape, i, w).transpose();
  }
  return radii;
}

DensityCorrelation density_correlation(const RowMatrix &r_o,
                                       const RowMatrix &r_e) {
  if (r_o.rows() != r_e.rows() || r_o.cols() != r_e.cols()) {
    throw ParameterError("density_correlation: shape mismatch");
  }
  const Index m = r_o.rows();
  if (m < 3) throw ParameterError("density_correlation: need at least 3 rows");
  DensityCorrelation out;
  out.per_direction = Vector::Zero(r_o.cols());
  for (Index l = 0; l < r_o.cols(); ++l) {
    const Scalar mo = r_o.col(l).mean();
    const Scalar me = r_e.col(l).mean();
    Scalar sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Index i = 0; i < m; ++i) {
      const Scalar dx = r_o(i, l) - mo;
      const Scalar dy = r_e(i, l) - me;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    if (sxx > 0.0 && syy > 0.0) {
      out.per_direction[l] =
          std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    }
  }
  out.total = out.per_direction.sum();
  return out;
}

Vector grad_log_q(const Vector &z, Scalar a, Scalar b) {
  const Scalar s = z.squaredNorm();
  if (s <= 0.0) return Vector::Zero(z.size());
  const Scalar coef =
      -2.0 * a * b * std::pow(s, b - 1.0) / (1.0 + a * std::pow(s, b));
  return coef * z;
}

Vector grad_log_one_minus_q(const Vector &z, Scalar a, Scalar b) {
  const Scalar s = z.squaredNorm();
  // Undefined at a coincident pair; no usable push direction there.
  if (s <= 0.0) return Vector::Zero(z.size());
  const Scalar coef = 2.0 * b / (s * (1.0 + a * std::pow(s, b)));
  return coef * z;
}

Vector radius_gradient(const Vector &z, const Vector &direction, Scalar radius,
                       Scalar w_sum, Scalar a, Scalar b) {
  const Scalar s = z.squaredNorm();
  if (s <= 0.0 || radius <= 0.0 || w_sum <= 0.0) {
    return Vector::Zero(z.size());
  }
  const Scalar q = kernel(s, a, b);
  const Scalar proj = direction.dot(z);
  // dQ/dz = -tail * z
  const Scalar tail = 2.0 * a * b * std::pow(s, b - 1.0) * q * q;
  return (2.0 * q * proj / (radius * w_sum)) * direction -
         (tail * proj * proj / (radius * w_sum)) * z + (tail / w_sum) * z;
}

Scalar cross_entropy(const graph::SimilarityGraph &g, const Matrix &Y,
                     const ShapeParams &shape) {
  if (g.size() != Y.rows()) {
    throw ParameterError("cross_entropy: size mismatch");
  }
  Scalar ce = 0.0;
  for (const auto &e : g.edges) {
    const Scalar s = (Y.row(e.v) - Y.row(e.u)).squaredNorm();
    const Scalar q = kernel(s, shape.a, shape.b);
    ce += -e.weight * std::log(std::max(q, kLogFloor)) -
          (1.0 - e.weight) * std::log(std::max(1.0 - q, kLogFloor));
  }
  return ce;
}

OptimizerState make_optimizer(const graph::SimilarityGraph &g,
                              const frames::FrameField &field,
                              const ShapeParams &shape, const RowMatrix &r_o,
                              Matrix y0, Scalar lambda, Index neg_samples,
                              Index epochs, std::uint64_t seed) {
  const Index m = g.size();
  if (y0.rows() != m || field.size() != m || r_o.rows() != m) {
    throw ParameterError("make_optimizer: size mismatch");
  }
  if (field.dim() != y0.cols() || r_o.cols() != y0.cols()) {
    throw ParameterError("make_optimizer: dimension mismatch");
  }
  if (lambda < 0.0) throw ParameterError("make_optimizer: lambda must be >= 0");
  if (epochs < 1) throw ParameterError("make_optimizer: epochs must be >= 1");
  if (neg_samples < 0) {
    throw ParameterError("make_optimizer: neg_samples must be >= 0");
  }

  OptimizerState st;
  st.g = &g;
  st.field = &field;
  st.shape = shape;
  st.lambda = lambda;
  st.neg_samples = neg_samples;
  st.epochs = epochs;
  st.r_o = r_o;
  st.Y = std::move(y0);
  st.rng = Rng(seed);

  Scalar max_w = 0.0;
  st.z_total = 0.0;
  for (const auto &e : g.edges) {
    max_w = std::max(max_w, e.weight);
    st.z_total += e.weight;
  }
  st.period.reserve(g.edges.size());
  for (const auto &e : g.edges) {
    st.period.push_back(e.weight > 0.0
                            ? max_w / e.weight
                            : std::numeric_limits<Scalar>::infinity());
  }
  st.next_due = st.period;

  st.var_o = Vector::Zero(st.r_o.cols());
  if (m > 1) {
    for (Index l = 0; l < st.r_o.cols(); ++l) {
      st.var_o[l] = st.r_o.col(l).squaredNorm() / static_cast<Scalar>(m - 1);
    }
  }
  refresh_caches(st);
  return st;
}

void refresh_caches(OptimizerState &st) {
  const Index m = st.Y.rows();
  const Index dp = st.Y.cols();
  st.w_sum.resize(m);
  st.radius_e.resize(m, dp);
  for (Index i = 0; i < m; ++i) {
    st.radius_e.row(i) =
        point_radii(st.Y, *st.field, *st.g, st.shape, i, st.w_sum[i])
            .transpose();
  }
  st.r_e = st.radius_e.array().log();
  st.mu_e = st.r_e.colwise().mean();
  st.var_e = Vector::Zero(dp);
  st.cov = Vector::Zero(dp);
  if (m > 1) {
    for (Index l = 0; l < dp; ++l) {
      const auto centered = st.r_e.col(l).array() - st.mu_e[l];
      st.var_e[l] = centered.square().sum() / static_cast<Scalar>(m - 1);
      st.cov[l] = (st.r_o.col(l).array() * centered).sum() /
                  static_cast<Scalar>(m - 1);
    }
  }
}

Vector correlation_gradient(const OptimizerState &st, Index i, Index j,
                            const Vector &z) {
  const Index dp = st.Y.cols();
  const Scalar m1 = static_cast<Scalar>(st.Y.rows() - 1);
  Vector total = Vector::Zero(dp);
  for (Index l = 0; l < dp; ++l) {
    if (!(st.var_o[l] > 0.0) || !(st.var_e[l] > 0.0)) continue;
    const Vector gi =
        radius_gradient(z, st.field->rotations[i].col(l), st.radius_e(i, l),
                        st.w_sum[i], st.shape.a, st.shape.b);
    const Vector gj =
        radius_gradient(z, st.field->rotations[j].col(l), st.radius_e(j, l),
                        st.w_sum[j], st.shape.a, st.shape.b);
    const Scalar inv_so = 1.0 / std::sqrt(st.var_o[l]);
    const Scalar inv_se = 1.0 / std::sqrt(st.var_e[l]);
    total += inv_so * ((st.r_o(i, l) * gi + st.r_o(j, l) * gj) * (inv_se / m1) -
                       (st.cov[l] * inv_se * inv_se * inv_se / m1) *
                           ((st.r_e(i, l) - st.mu_e[l]) * gi +
                            (st.r_e(j, l) - st.mu_e[l]) * gj));
  }
  return total;
}

void sgd_epoch(OptimizerState &st, Index epoch) {
  if (epoch < 0 || epoch >= st.epochs) {
    throw ParameterError("sgd_epoch: epoch out of range");
  }
  refresh_caches(st);
  const Scalar alpha =
      1.0 - static_cast<Scalar>(epoch) / static_cast<Scalar>(st.epochs);
  const Index m = st.Y.rows();
  const Index dp = st.Y.cols();
  const auto &edges = st.g->edges;

  Vector z(dp), grad(dp), rep(dp);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (st.next_due[e] > static_cast<Scalar>(epoch + 1)) continue;
    st.next_due[e] += st.period[e];
    const Index u = edges[e].u;
    const Index v = edges[e].v;
    z = (st.Y.row(v) - st.Y.row(u)).transpose();

    grad = grad_log_q(z, st.shape.a, st.shape.b);
    if (st.lambda > 0.0) {
      // The rho derivative carries 1/(m-1) from the moment statistics, which
      // would let the density force vanish with sample size while attraction
      // stays O(1); the update rescales it away so the two terms remain
      // commensurate at any m.
      const Scalar importance = st.lambda * st.z_total *
                                static_cast<Scalar>(m - 1) /
                                (static_cast<Scalar>(m) * edges[e].weight);
      grad += importance * correlation_gradient(st, u, v, z);
    }
    for (Index c = 0; c < dp; ++c) {
      const Scalar step = alpha * clip(grad[c]);
      st.Y(u, c) -= step;
      st.Y(v, c) += step;
    }

    if (st.neg_samples > 0) {
      // Each draw repels at full strength from the current position; an
      // averaged batch is too weak against the unit-weight attraction and
      // lets neighborhoods collapse.
      for (Index endpoint : {u, v}) {
        for (Index t = 0; t < st.neg_samples; ++t) {
          const Index other = static_cast<Index>(st.rng.index(m));
          if (other == endpoint) continue;
          rep = grad_log_one_minus_q(
              (st.Y.row(other) - st.Y.row(endpoint)).transpose(), st.shape.a,
              st.shape.b);
          for (Index c = 0; c < dp; ++c) {
            st.Y(endpoint, c) -= alpha * clip(rep[c]);
          }
        }
      }
    }
  }
  if (!st.Y.allFinite()) {
    throw OptimizationDivergedError(
        "sgd_epoch: non-finite coordinates at epoch " + std::to_string(epoch));
  }
}

EmbeddingResult embed(const RowMatrix &data, const EmbedConfig &config) {
  const Index m = data.rows();
  const Index n = data.cols();
  if (m < 2) throw DataError("embed: need at least 2 points");
  if (config.k < 1 || config.k >= m) {
    throw ParameterError("embed: k must satisfy 1 <= k < m");
  }
  if (config.epochs < 1) throw ParameterError("embed: epochs must be >= 1");
  if (config.d_prime < 1 || config.d_prime > n) {
    throw ParameterError("embed: d_prime must satisfy 1 <= d' <= dim");
  }
  if (config.d_max < 1) throw ParameterError("embed: d_max must be >= 1");
  if (!(config.q >= 0.0 && config.q <= 1.0)) {
    throw ParameterError("embed: q must lie in [0,1]");
  }
  if (config.lambda < 0.0) throw ParameterError("embed: lambda must be >= 0");
  if (!(config.min_dist > 0.0)) {
    throw ParameterError("embed: min_dist must be positive");
  }
  if (!(config.tau > 0.0 && config.tau <= 1.0)) {
    throw ParameterError("embed: tau must lie in (0,1]");
  }
  if (config.neg_samples < 0) {
    throw ParameterError("embed: neg_samples must be >= 0");
  }
  const int threads = std::max(1, config.threads);

  EmbeddingResult out;
  out.config = config;

  const auto knn = graph::build_similarity_graph(data, config.k, threads);
  const auto frame_list = tangent::local_frames(
      data, knn.graph, knn.neighbors, config.d_max, config.tau, threads);
  out.global_dim = tangent::global_dim(frame_list, config.d_max);
  out.importance = tangent::importance_matrix(frame_list, n, threads);
  out.shape = fit_shape_params(config.min_dist);

  const Index frame_epochs =
      static_cast<Index>(std::llround(config.q * config.epochs));
  const auto sim = frames::tangent_similarities(frame_list, knn.neighbors,
                                                out.global_dim, threads);
  RowMatrix flat = frames::init_frames(m, config.d_prime, config.seed);
  out.frame_kl_initial =
      frames::kl_divergence(sim, flat, out.shape.a, out.shape.b);
  if (frame_epochs > 0) {
    auto opt = frames::optimize_frames(sim, std::move(flat), frame_epochs,
                                       out.shape.a, out.shape.b,
                                       config.neg_samples, config.seed + 1);
    flat = std::move(opt.flat);
    out.frame_kl = std::move(opt.kl);
  }
  out.field = frames::orthonormalize(flat, frame_list, config.d_prime);

  const RowMatrix r_o = original_radii(frame_list, config.d_prime);
  Matrix y0 = init_embedding(knn.graph, config.d_prime, config.seed + 2);
  auto st = make_optimizer(knn.graph, out.field, out.shape, r_o, std::move(y0),
                           config.lambda, config.neg_samples, config.epochs,
                           config.seed + 3);
  out.ce_initial = cross_entropy(knn.graph, st.Y, out.shape);
  out.ce.reserve(config.epochs);
  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    sgd_epoch(st, epoch);
    out.ce.push_back(cross_entropy(knn.graph, st.Y, out.shape));
  }

  if (m >= 3) {
    const RowMatrix final_radii =
        embedded_radii(st.Y, out.field, knn.graph, out.shape);
    const RowMatrix log_radii = final_radii.array().log();
    out.radius_correlation = density_correlation(r_o, log_radii).total;
  }
  out.Y = std::move(st.Y);
  return out;
}

} // namespace featmap::projection
