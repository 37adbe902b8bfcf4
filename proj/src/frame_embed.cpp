#include "featmap/frame_embed.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "featmap/errors.hpp"
#include "featmap/parallel.hpp"
#include "featmap/rng.hpp"

namespace featmap::frames {

namespace {

constexpr Scalar kInitScale = 1e-2;
constexpr Scalar kGradClip = 4.0;
constexpr Scalar kMinCosDist = 1e-3;  // repulsion denominator floor
constexpr Scalar kMinNorm = 1e-12;

// UMAP-style due times: an edge of weight w is visited every max_w / w epochs.
struct EdgeSchedule {
  std::vector<Scalar> period;
  std::vector<Scalar> next_due;

  explicit EdgeSchedule(const std::vector<graph::SimilarityGraph::Edge> &edges) {
    Scalar max_w = 0.0;
    for (const auto &e : edges) max_w = std::max(max_w, e.weight);
    period.reserve(edges.size());
    for (const auto &e : edges) {
      period.push_back(e.weight > 0.0
                           ? max_w / e.weight
                           : std::numeric_limits<Scalar>::infinity());
    }
    next_due = period;
  }

  bool due(std::size_t e, Index epoch) {
    if (next_due[e] > static_cast<Scalar>(epoch + 1)) return false;
    next_due[e] += period[e];
    return true;
  }
};

Scalar cosine(const RowMatrix &flat, Index i, Index j) {
  const Scalar ni = flat.row(i).norm();
  const Scalar nj = flat.row(j).norm();
  if (ni < kMinNorm || nj < kMinNorm) return 0.0;
  return std::clamp(flat.row(i).dot(flat.row(j)) / (ni * nj), -1.0, 1.0);
}

} // namespace

TangentSimilarity tangent_similarities(
    const std::vector<tangent::TangentFrame> &frame_list,
    const graph::NeighborLists &neighbors, Index d, int threads) {
  const Index m = neighbors.size();
  const Index k = neighbors.k();

  std::vector<Matrix> conformed(m);
  parallel_for(m, threads, [&](Index i) {
    conformed[i] = tangent::conform_basis(frame_list[i], d);
  });

  RowMatrix cos_dist(m, k);
  parallel_for(m, threads, [&](Index i) {
    for (Index c = 0; c < k; ++c) {
      const Index j = neighbors.indices(i, c);
      cos_dist(i, c) =
          std::abs(1.0 - tangent::consistence(conformed[i], conformed[j]));
    }
  });

  RowMatrix directed(m, k);
  parallel_for(m, threads, [&](Index i) {
    Vector sorted = cos_dist.row(i).transpose();
    std::sort(sorted.data(), sorted.data() + k);
    const auto [rho, gamma] = graph::calibrate_bandwidth(sorted);
    for (Index c = 0; c < k; ++c) {
      Scalar v = std::exp(-(cos_dist(i, c) - rho) / gamma);
      directed(i, c) = std::min(v, 1.0);
    }
  });

  return graph::fuzzy_union(neighbors.indices, directed);
}

RowMatrix init_frames(Index m, Index d_prime, std::uint64_t seed) {
  if (d_prime < 1) throw ParameterError("init_frames: d_prime must be >= 1");
  Rng rng(seed);
  RowMatrix flat(m, d_prime * d_prime);
  for (Index i = 0; i < m; ++i) {
    for (Index c = 0; c < flat.cols(); ++c) flat(i, c) = kInitScale * rng.normal();
  }
  return flat;
}

Scalar kl_divergence(const TangentSimilarity &sim, const RowMatrix &flat,
                     Scalar a, Scalar b) {
  Scalar kl = 0.0;
  for (const auto &e : sim.edges) {
    const Scalar dist = std::max(0.0, 1.0 - cosine(flat, e.u, e.v));
    const Scalar log_q = -std::log1p(a * std::pow(dist, 2.0 * b));
    kl += e.weight * (std::log(e.weight) - log_q);
  }
  return kl;
}

FrameOptResult optimize_frames(const TangentSimilarity &sim, RowMatrix flat,
                               Index epochs, Scalar a, Scalar b,
                               Index neg_samples, std::uint64_t seed) {
  if (epochs < 1) throw ParameterError("optimize_frames: epochs must be >= 1");
  if (a <= 0.0 || b <= 0.0) {
    throw ParameterError("optimize_frames: shape parameters must be positive");
  }
  const Index m = flat.rows();
  const Index width = flat.cols();
  Rng rng(seed);
  EdgeSchedule schedule(sim.edges);

  FrameOptResult result;
  result.initial_kl = kl_divergence(sim, flat, a, b);
  result.kl.reserve(epochs);

  Vector grad(width);
  auto cos_grad = [&](Index i, Index j, Scalar c, Vector &g) {
    // d cos / d flat.row(i), for unit-normalized Frobenius cosine.
    const Scalar ni = flat.row(i).norm();
    const Scalar nj = flat.row(j).norm();
    g = flat.row(j).transpose() / (ni * nj) -
        (c / (ni * ni)) * flat.row(i).transpose();
  };
  auto apply = [&](Index i, Scalar alpha, const Vector &g) {
    for (Index c = 0; c < width; ++c) {
      flat(i, c) -= alpha * std::clamp(g[c], -kGradClip, kGradClip);
    }
  };

  for (Index epoch = 0; epoch < epochs; ++epoch) {
    const Scalar alpha = 1.0 - static_cast<Scalar>(epoch) / epochs;
    for (std::size_t e = 0; e < sim.edges.size(); ++e) {
      if (!schedule.due(e, epoch)) continue;
      const Index u = sim.edges[e].u;
      const Index v = sim.edges[e].v;
      if (flat.row(u).norm() < kMinNorm || flat.row(v).norm() < kMinNorm)
        continue;

      const Scalar c_uv = cosine(flat, u, v);
      const Scalar dist = std::max(0.0, 1.0 - c_uv);
      if (dist > 0.0) {
        const Scalar pw = std::pow(dist, 2.0 * b - 1.0);
        const Scalar coef = 2.0 * a * b * pw / (1.0 + a * pw * dist);
        // dist = 1 - cos, so dL/du = -coef * dcos/du; descent raises cosine
        cos_grad(u, v, c_uv, grad);
        apply(u, alpha, (-coef) * grad);
        cos_grad(v, u, c_uv, grad);
        apply(v, alpha, (-coef) * grad);
      }
      for (Index s = 0; s < neg_samples; ++s) {
        const Index l = static_cast<Index>(rng.index(m));
        if (l == u || flat.row(l).norm() < kMinNorm) continue;
        const Scalar c_ul = cosine(flat, u, l);
        const Scalar d_ul = std::max(kMinCosDist, 1.0 - c_ul);
        const Scalar q = 1.0 / (1.0 + a * std::pow(d_ul, 2.0 * b));
        const Scalar coef = 2.0 * b * q / d_ul;
        // repulsion loss -log(1-Q) has dL/du = +coef * dcos/du
        cos_grad(u, l, c_ul, grad);
        apply(u, alpha, coef * grad);
      }
    }
    if (!flat.allFinite()) {
      throw OptimizationDivergedError(
          "optimize_frames: non-finite frame at epoch " +
          std::to_string(epoch));
    }
    result.kl.push_back(kl_divergence(sim, flat, a, b));
  }
  result.flat = std::move(flat);
  return result;
}

FrameField orthonormalize(const RowMatrix &flat,
                          const std::vector<tangent::TangentFrame> &originals,
                          Index d_prime) {
  const Index m = flat.rows();
  if (!flat.allFinite()) {
    throw OptimizationDivergedError("orthonormalize: non-finite raw frames");
  }
  FrameField field;
  field.rotations.resize(m);
  field.singular_values = RowMatrix::Zero(m, d_prime);

  for (Index i = 0; i < m; ++i) {
    Matrix raw(d_prime, d_prime);
    for (Index r = 0; r < d_prime; ++r) {
      for (Index c = 0; c < d_prime; ++c) raw(r, c) = flat(i, r * d_prime + c);
    }
    Eigen::JacobiSVD<Matrix> svd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector &sv = svd.singularValues();
    if (sv[sv.size() - 1] <= 1e-300) {
      field.rotations[i] = Matrix::Identity(d_prime, d_prime);
      ++field.fallback_count;
    } else {
      field.rotations[i] = svd.matrixU() * svd.matrixV().transpose();
    }
    const auto &orig_sv = originals[i].singular_values;
    const Index copy = std::min<Index>(d_prime, orig_sv.size());
    field.singular_values.row(i).head(copy) = orig_sv.head(copy).transpose();
  }
  return field;
}

} // namespace featmap::frames
