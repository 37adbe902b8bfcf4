#ifndef FEATMAP_TESTS_ORACLES_HPP
#define FEATMAP_TESTS_ORACLES_HPP

// Naive reference implementations used to cross-check the library. Plain
// loops, no shared code with src/, quadratic where that is simplest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "featmap/rng.hpp"
#include "featmap/types.hpp"

namespace oracle {

using featmap::Index;
using featmap::Matrix;
using featmap::RowMatrix;
using featmap::Scalar;
using featmap::Vector;

inline Scalar dist(const RowMatrix &x, Index i, Index j) {
  return (x.row(i) - x.row(j)).norm();
}

// Every other point ordered by (distance, index) from point i.
inline std::vector<Index> order_from(const RowMatrix &x, Index i) {
  std::vector<std::pair<Scalar, Index>> by_dist;
  for (Index j = 0; j < x.rows(); ++j) {
    if (j == i) continue;
    by_dist.emplace_back((x.row(i) - x.row(j)).squaredNorm(), j);
  }
  std::sort(by_dist.begin(), by_dist.end());
  std::vector<Index> out;
  out.reserve(by_dist.size());
  for (const auto &[d, j] : by_dist) out.push_back(j);
  return out;
}

inline std::vector<std::vector<Index>> brute_knn(const RowMatrix &x, Index k) {
  std::vector<std::vector<Index>> nn(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    auto ord = order_from(x, i);
    nn[i].assign(ord.begin(), ord.begin() + k);
  }
  return nn;
}

// 1-based rank of j among the neighbors of i.
inline Index rank_of(const std::vector<Index> &order, Index j) {
  for (Index r = 0; r < static_cast<Index>(order.size()); ++r) {
    if (order[r] == j) return r + 1;
  }
  return -1;
}

inline Scalar trustworthiness(const RowMatrix &x, const RowMatrix &y,
                              Index k) {
  const Index m = x.rows();
  Scalar penalty = 0.0;
  for (Index i = 0; i < m; ++i) {
    auto ox = order_from(x, i);
    auto oy = order_from(y, i);
    std::set<Index> in_x(ox.begin(), ox.begin() + k);
    for (Index r = 0; r < k; ++r) {
      const Index j = oy[r];
      if (in_x.count(j)) continue;
      penalty += static_cast<Scalar>(rank_of(ox, j) - k);
    }
  }
  const Scalar norm =
      2.0 / (static_cast<Scalar>(m) * k * (2.0 * m - 3.0 * k - 1.0));
  return 1.0 - norm * penalty;
}

inline Scalar continuity(const RowMatrix &x, const RowMatrix &y, Index k) {
  return trustworthiness(y, x, k);
}

inline Scalar knn_accuracy(const RowMatrix &y,
                           const std::vector<Index> &labels, Index k) {
  const Index m = y.rows();
  Index hits = 0;
  for (Index i = 0; i < m; ++i) {
    auto ord = order_from(y, i);
    std::map<Index, Index> votes;
    for (Index r = 0; r < k; ++r) ++votes[labels[ord[r]]];
    Index best_label = -1, best_count = -1;
    for (const auto &[label, count] : votes) {
      if (count > best_count) {
        best_count = count;
        best_label = label;
      }
    }
    if (best_label == labels[i]) ++hits;
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(m);
}

inline std::vector<Scalar> average_ranks(const std::vector<Scalar> &v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<Scalar> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const Scalar shared = (static_cast<Scalar>(i) + static_cast<Scalar>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

inline Scalar pearson(const std::vector<Scalar> &a,
                      const std::vector<Scalar> &b) {
  const std::size_t n = a.size();
  Scalar ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<Scalar>(n);
  mb /= static_cast<Scalar>(n);
  Scalar saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline Scalar shepard_goodness(const RowMatrix &x, const RowMatrix &y) {
  std::vector<Scalar> dx, dy;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = i + 1; j < x.rows(); ++j) {
      dx.push_back(dist(x, i, j));
      dy.push_back(dist(y, i, j));
    }
  }
  return pearson(average_ranks(dx), average_ranks(dy));
}

inline Scalar normalized_stress(const RowMatrix &x, const RowMatrix &y) {
  Scalar num = 0.0, den = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = i + 1; j < x.rows(); ++j) {
      const Scalar dxij = dist(x, i, j);
      const Scalar dyij = dist(y, i, j);
      num += (dxij - dyij) * (dxij - dyij);
      den += dxij * dxij;
    }
  }
  return num / den;
}

inline Scalar centroid_triplet_accuracy(const RowMatrix &x, const RowMatrix &y,
                                        const std::vector<Index> &labels) {
  std::map<Index, std::pair<Vector, Index>> sums;
  for (Index i = 0; i < x.rows(); ++i) {
    auto it = sums.find(labels[i]);
    if (it == sums.end()) {
      sums.emplace(labels[i],
                   std::make_pair(Vector(x.row(i).transpose()), Index{1}));
    } else {
      it->second.first += x.row(i).transpose();
      ++it->second.second;
    }
  }
  std::map<Index, std::pair<Vector, Index>> sums_y;
  for (Index i = 0; i < y.rows(); ++i) {
    auto it = sums_y.find(labels[i]);
    if (it == sums_y.end()) {
      sums_y.emplace(labels[i],
                     std::make_pair(Vector(y.row(i).transpose()), Index{1}));
    } else {
      it->second.first += y.row(i).transpose();
      ++it->second.second;
    }
  }
  std::vector<Vector> cx, cy;
  for (const auto &[label, acc] : sums) {
    cx.push_back(acc.first / static_cast<Scalar>(acc.second));
  }
  for (const auto &[label, acc] : sums_y) {
    cy.push_back(acc.first / static_cast<Scalar>(acc.second));
  }
  const Index c = static_cast<Index>(cx.size());
  Index preserved = 0, total = 0;
  auto sign = [](Scalar v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
  for (Index a = 0; a < c; ++a) {
    for (Index b = 0; b < c; ++b) {
      if (b == a) continue;
      for (Index d = b + 1; d < c; ++d) {
        if (d == a) continue;
        const int sx = sign((cx[a] - cx[b]).norm() - (cx[a] - cx[d]).norm());
        const int sy = sign((cy[a] - cy[b]).norm() - (cy[a] - cy[d]).norm());
        ++total;
        if (sx == sy) ++preserved;
      }
    }
  }
  return static_cast<Scalar>(preserved) / static_cast<Scalar>(total);
}

// Smooth-kNN bandwidth by long bisection on sum exp(-(d - d_min)/gamma)
// = log2(#neighbors).
inline std::pair<Scalar, Scalar> smooth_knn(const std::vector<Scalar> &d) {
  const Scalar rho = *std::min_element(d.begin(), d.end());
  const Scalar target = std::log2(static_cast<Scalar>(d.size()));
  Scalar lo = 1e-12, hi = 1e12;
  for (int it = 0; it < 300; ++it) {
    const Scalar mid = 0.5 * (lo + hi);
    Scalar s = 0.0;
    for (Scalar v : d) s += std::exp(-(v - rho) / mid);
    (s > target ? hi : lo) = mid;
  }
  return {rho, 0.5 * (lo + hi)};
}

// Haar sample on O(d): QR of a Gaussian matrix with the R-diagonal sign fix.
inline Matrix haar_orthogonal(Index d, featmap::Rng &rng) {
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// Central difference of a scalar function of one coordinate.
inline Scalar central_diff(const std::function<Scalar(Scalar)> &f, Scalar x0,
                           Scalar h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

inline Scalar rel_err(Scalar got, Scalar want) {
  const Scalar scale = std::max({std::abs(got), std::abs(want), Scalar{1e-8}});
  return std::abs(got - want) / scale;
}

} // namespace oracle

#endif
