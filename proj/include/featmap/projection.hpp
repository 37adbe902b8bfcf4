#ifndef FEATMAP_PROJECTION_HPP
#define FEATMAP_PROJECTION_HPP

#include <cstdint>
#include <vector>

#include "featmap/frame_embed.hpp"
#include "featmap/knn_graph.hpp"
#include "featmap/rng.hpp"
#include "featmap/tangent.hpp"
#include "featmap/types.hpp"

namespace featmap::projection {

// Low-dimensional kernel Q(z) = (1 + a |z|^2b)^-1.
struct ShapeParams {
  Scalar a = 1.0;
  Scalar b = 1.0;
  Scalar min_dist = 0.1;
  Scalar residual = 0.0;  // mean squared calibration error, < 1e-2
};

// Least-squares fit of the kernel to [1 on (0,min_dist]; exp(-(x-min_dist))
// after] sampled at 300 points on (0,3].
ShapeParams fit_shape_params(Scalar min_dist);

// Spectral coordinates from the symmetric-normalized Laplacian, one block per
// connected component, components offset apart, overall max-abs 10. Falls
// back to seeded uniform(-10,10) noise when the eigensolve fails.
Matrix init_embedding(const graph::SimilarityGraph &g, Index d_prime,
                      std::uint64_t seed);

// Centered log sigma^2 per point and principal direction, m x d'. Missing or
// zero spectrum entries are clamped to kRadiusEps before the log.
RowMatrix original_radii(const std::vector<tangent::TangentFrame> &frames,
                         Index d_prime);

// R_il = (1/W_i) sum_j Q_ij (z_ij . v_il)^2 over the stored neighbors of i,
// clamped to at least kRadiusEps.
RowMatrix embedded_radii(const Matrix &Y, const frames::FrameField &field,
                         const graph::SimilarityGraph &g,
                         const ShapeParams &shape);

struct DensityCorrelation {
  Scalar total = 0.0;      // sum over directions, in [-d', d']
  Vector per_direction;    // Pearson per column, 0 where variance vanishes
};

DensityCorrelation density_correlation(const RowMatrix &r_o,
                                       const RowMatrix &r_e);

// Exact kernel derivatives with respect to z = y_j - y_i.
Vector grad_log_q(const Vector &z, Scalar a, Scalar b);
Vector grad_log_one_minus_q(const Vector &z, Scalar a, Scalar b);

// d r_i^e / d z_ij under frozen contributions from the other neighbors;
// radius and w_sum are the cached R_il and W_i.
Vector radius_gradient(const Vector &z, const Vector &direction, Scalar radius,
                       Scalar w_sum, Scalar a, Scalar b);

// Cross entropy of the kernel against edge weights, summed over the stored
// edge list. Invariant under translation of Y.
Scalar cross_entropy(const graph::SimilarityGraph &g, const Matrix &Y,
                     const ShapeParams &shape);

// Point optimizer. Caches (W, r_e, moments) are rebuilt at each epoch start
// and frozen within the epoch; edges fire on an epochs-per-sample schedule.
struct OptimizerState {
  const graph::SimilarityGraph *g = nullptr;
  const frames::FrameField *field = nullptr;
  ShapeParams shape;
  Scalar lambda = 0.0;
  Index neg_samples = 5;
  Index epochs = 1;
  Scalar z_total = 0.0;  // sum of edge weights
  RowMatrix r_o;         // centered original log radii
  Matrix Y;
  Rng rng{0};

  std::vector<Scalar> period;
  std::vector<Scalar> next_due;

  // epoch caches
  Vector w_sum;        // per point
  RowMatrix radius_e;  // clamped embedded radii
  RowMatrix r_e;       // their logs
  Vector mu_e;       // per direction
  Vector var_e;
  Vector var_o;
  Vector cov;
};

OptimizerState make_optimizer(const graph::SimilarityGraph &g,
                              const frames::FrameField &field,
                              const ShapeParams &shape, const RowMatrix &r_o,
                              Matrix y0, Scalar lambda, Index neg_samples,
                              Index epochs, std::uint64_t seed);

void refresh_caches(OptimizerState &state);

// Sum over directions of d rho^(l) / d z_ij at the cached moments, where g_i
// and g_j flow through the endpoint radii. Directions with vanishing variance
// contribute zero.
Vector correlation_gradient(const OptimizerState &state, Index i, Index j,
                            const Vector &z);

void sgd_epoch(OptimizerState &state, Index epoch);

struct EmbedConfig {
  Index k = 15;
  Index epochs = 500;
  Index d_prime = 2;
  Index d_max = 8;
  Index neg_samples = 5;
  Scalar q = 0.3;
  Scalar lambda = 0.5;
  Scalar min_dist = 0.1;
  Scalar tau = 0.9;
  std::uint64_t seed = 42;
  int threads = 1;
};

struct EmbeddingResult {
  Matrix Y;
  frames::FrameField field;
  RowMatrix importance;  // m x n
  ShapeParams shape;
  Index global_dim = 0;
  Scalar ce_initial = 0.0;
  std::vector<Scalar> ce;        // one entry per point epoch
  Scalar frame_kl_initial = 0.0;
  std::vector<Scalar> frame_kl;  // one entry per frame epoch
  Scalar radius_correlation = 0.0;
  EmbedConfig config;
};

// Full pipeline: similarity graph, tangent frames, frame field fit for
// round(q * epochs) epochs, then anisotropic point optimization for epochs.
EmbeddingResult embed(const RowMatrix &data, const EmbedConfig &config);

} // namespace featmap::projection

#endif
