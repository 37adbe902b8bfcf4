#include "featmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "featmap/errors.hpp"
#include "featmap/rng.hpp"

namespace featmap::metrics {

namespace {

constexpr std::uint64_t kPairSeed = 0x9e3779b9;
constexpr std::size_t kMaxExactPairs = 1000000;
constexpr std::size_t kSampledPairs = 2000;

// Neighbor order around point i: ascending squared distance, index tie-break,
// self excluded. Writes m-1 indices.
void neighbor_order(const RowMatrix &pts, Index i, std::vector<Index> &out) {
  const Index m = pts.rows();
  out.clear();
  out.reserve(m - 1);
  std::vector<std::pair<Scalar, Index>> dist;
  dist.reserve(m - 1);
  for (Index j = 0; j < m; ++j) {
    if (j == i) continue;
    dist.emplace_back((pts.row(j) - pts.row(i)).squaredNorm(), j);
  }
  std::sort(dist.begin(), dist.end());
  for (const auto &[d, j] : dist) out.push_back(j);
}

void check_pair(const RowMatrix &x, const RowMatrix &y) {
  if (x.rows() != y.rows()) {
    throw ParameterError("metrics: row count mismatch between spaces");
  }
  if (x.rows() < 2) throw ParameterError("metrics: need at least 2 points");
}

// Upper-triangle pair list, exact when small enough, seeded sample otherwise.
std::vector<std::pair<Index, Index>> distance_pairs(Index m) {
  const std::size_t total =
      static_cast<std::size_t>(m) * static_cast<std::size_t>(m - 1) / 2;
  std::vector<std::pair<Index, Index>> pairs;
  if (total <= kMaxExactPairs) {
    pairs.reserve(total);
    for (Index i = 0; i < m; ++i) {
      for (Index j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
  }
  Rng rng(kPairSeed);
  pairs.reserve(kSampledPairs);
  while (pairs.size() < kSampledPairs) {
    const Index i = static_cast<Index>(rng.index(m));
    const Index j = static_cast<Index>(rng.index(m));
    if (i == j) continue;
    pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  return pairs;
}

// Ranks 1..n with ties sharing their average rank.
Vector average_ranks(const Vector &values) {
  const Index n = values.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return values[a] < values[b];
  });
  Vector ranks(n);
  Index pos = 0;
  while (pos < n) {
    Index end = pos;
    while (end + 1 < n && values[order[end + 1]] == values[order[pos]]) ++end;
    const Scalar shared = static_cast<Scalar>(pos + end) / 2.0 + 1.0;
    for (Index t = pos; t <= end; ++t) ranks[order[t]] = shared;
    pos = end + 1;
  }
  return ranks;
}

int sign_of(Scalar v) { return (v > 0.0) - (v < 0.0); }

} // namespace

Scalar trustworthiness(const RowMatrix &x, const RowMatrix &y, Index k) {
  check_pair(x, y);
  const Index m = x.rows();
  if (k < 1 || 2 * k >= m) {
    throw ParameterError("trustworthiness: need 1 <= k < m/2");
  }

  std::vector<Index> order_x, order_y;
  std::vector<Index> rank_x(m);
  Scalar penalty = 0.0;
  for (Index i = 0; i < m; ++i) {
    neighbor_order(x, i, order_x);
    neighbor_order(y, i, order_y);
    for (Index r = 0; r < m - 1; ++r) rank_x[order_x[r]] = r + 1;
    for (Index r = 0; r < k; ++r) {
      const Index j = order_y[r];
      if (rank_x[j] > k) penalty += static_cast<Scalar>(rank_x[j] - k);
    }
  }
  const Scalar norm = 2.0 / (static_cast<Scalar>(m) * k * (2.0 * m - 3.0 * k - 1.0));
  return 1.0 - norm * penalty;
}

Scalar continuity(const RowMatrix &x, const RowMatrix &y, Index k) {
  return trustworthiness(y, x, k);
}

Scalar knn_accuracy(const RowMatrix &y, const std::vector<Index> &labels,
                    Index k) {
  const Index m = y.rows();
  if (static_cast<Index>(labels.size()) != m) {
    throw ParameterError("knn_accuracy: labels must cover every point");
  }
  if (k < 1 || k >= m) throw ParameterError("knn_accuracy: need 1 <= k < m");

  std::vector<Index> order;
  Index hits = 0;
  std::map<Index, Index> votes;
  for (Index i = 0; i < m; ++i) {
    neighbor_order(y, i, order);
    votes.clear();
    for (Index r = 0; r < k; ++r) ++votes[labels[order[r]]];
    Index best_label = -1, best_count = 0;
    for (const auto &[label, count] : votes) {
      if (count > best_count) {  // map order makes ties pick the lowest label
        best_count = count;
        best_label = label;
      }
    }
    if (best_label == labels[i]) ++hits;
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(m);
}

Scalar shepard_goodness(const RowMatrix &x, const RowMatrix &y) {
  check_pair(x, y);
  const Index m = x.rows();
  if (m < 3) throw ParameterError("shepard_goodness: need at least 3 points");

  const auto pairs = distance_pairs(m);
  const Index n = static_cast<Index>(pairs.size());
  Vector dx(n), dy(n);
  for (Index t = 0; t < n; ++t) {
    dx[t] = (x.row(pairs[t].first) - x.row(pairs[t].second)).norm();
    dy[t] = (y.row(pairs[t].first) - y.row(pairs[t].second)).norm();
  }
  const Vector rx = average_ranks(dx);
  const Vector ry = average_ranks(dy);
  const Scalar mx = rx.mean();
  const Scalar my = ry.mean();
  Scalar sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (Index t = 0; t < n; ++t) {
    sxy += (rx[t] - mx) * (ry[t] - my);
    sxx += (rx[t] - mx) * (rx[t] - mx);
    syy += (ry[t] - my) * (ry[t] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    std::fprintf(stderr,
                 "featmap: shepard_goodness: zero rank variance, returning 0\n");
    return 0.0;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Scalar normalized_stress(const RowMatrix &x, const RowMatrix &y) {
  check_pair(x, y);
  const auto pairs = distance_pairs(x.rows());
  Scalar num = 0.0, den = 0.0;
  for (const auto &[i, j] : pairs) {
    const Scalar dx = (x.row(i) - x.row(j)).norm();
    const Scalar dy = (y.row(i) - y.row(j)).norm();
    num += (dx - dy) * (dx - dy);
    den += dx * dx;
  }
  if (den <= 0.0) {
    throw ParameterError("normalized_stress: original distances are all zero");
  }
  return num / den;
}

Scalar centroid_triplet_accuracy(const RowMatrix &x, const RowMatrix &y,
                                 const std::vector<Index> &labels) {
  check_pair(x, y);
  const Index m = x.rows();
  if (static_cast<Index>(labels.size()) != m) {
    throw ParameterError(
        "centroid_triplet_accuracy: labels must cover every point");
  }
  std::map<Index, std::pair<Index, Index>> slot;  // label -> (slot, count)
  for (Index i = 0; i < m; ++i) {
    auto [it, fresh] = slot.try_emplace(
        labels[i], static_cast<Index>(slot.size()), Index{0});
    ++it->second.second;
    (void)fresh;
  }
  const Index classes = static_cast<Index>(slot.size());
  if (classes < 3) {
    throw ParameterError("centroid_triplet_accuracy: need at least 3 classes");
  }

  Matrix cx = Matrix::Zero(classes, x.cols());
  Matrix cy = Matrix::Zero(classes, y.cols());
  for (Index i = 0; i < m; ++i) {
    const auto &[c, count] = slot[labels[i]];
    cx.row(c) += x.row(i) / static_cast<Scalar>(count);
    cy.row(c) += y.row(i) / static_cast<Scalar>(count);
  }

  Index hits = 0, total = 0;
  for (Index a = 0; a < classes; ++a) {
    for (Index b = 0; b < classes; ++b) {
      if (b == a) continue;
      for (Index c = b + 1; c < classes; ++c) {
        if (c == a) continue;
        const Scalar gap_x =
            (cx.row(a) - cx.row(b)).norm() - (cx.row(a) - cx.row(c)).norm();
        const Scalar gap_y =
            (cy.row(a) - cy.row(b)).norm() - (cy.row(a) - cy.row(c)).norm();
        hits += sign_of(gap_x) == sign_of(gap_y);
        ++total;
      }
    }
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(total);
}

MetricReport evaluate(const RowMatrix &x, const RowMatrix &y,
                      const std::vector<Index> *labels, Index k) {
  MetricReport report;
  report.k = k;
  report.m = x.rows();
  report.trustworthiness = trustworthiness(x, y, k);
  report.continuity = continuity(x, y, k);
  report.shepard_goodness = shepard_goodness(x, y);
  report.normalized_stress = normalized_stress(x, y);
  const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
  report.knn_accuracy = nan;
  report.centroid_triplet_accuracy = nan;
  if (labels != nullptr) {
    report.knn_accuracy = knn_accuracy(y, *labels, k);
    std::vector<Index> unique(*labels);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    if (unique.size() >= 3) {
      report.centroid_triplet_accuracy = centroid_triplet_accuracy(x, y, *labels);
    }
  }
  return report;
}

} // namespace featmap::metrics
