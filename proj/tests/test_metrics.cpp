#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "featmap/errors.hpp"
#include "featmap/metrics.hpp"
#include "featmap/rng.hpp"
#include "oracles.hpp"

using namespace featmap;

namespace {

RowMatrix random_cloud(Index m, Index n, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix x(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) x(i, j) = rng.normal();
  }
  return x;
}

RowMatrix rotate2(const RowMatrix &x, Scalar t) {
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return x * r.transpose();
}

} // namespace

TEST_CASE("trustworthiness identity, swap fixture, rigid motion") {
  const RowMatrix x = random_cloud(12, 3, 1);
  CHECK(metrics::trustworthiness(x, x, 3) == doctest::Approx(1.0));

  // line of 4 points with the middle two swapped in the embedding
  RowMatrix line(4, 1), swapped(4, 1);
  line << 0.0, 1.0, 2.0, 3.0;
  swapped << 0.0, 2.0, 1.0, 3.0;
  CHECK(metrics::trustworthiness(line, swapped, 1) ==
        doctest::Approx(oracle::trustworthiness(line, swapped, 1))
            .epsilon(1e-12));

  const RowMatrix y2 = random_cloud(14, 2, 2);
  RowMatrix moved = rotate2(y2, 0.83);
  moved.col(0).array() += 4.0;
  CHECK(metrics::trustworthiness(y2, moved, 4) == doctest::Approx(1.0));
  // uniform scaling preserves ranks too
  CHECK(metrics::trustworthiness(y2, RowMatrix(3.0 * y2), 4) ==
        doctest::Approx(1.0));

  CHECK_THROWS_AS(metrics::trustworthiness(x, x, 6), ParameterError);
  CHECK_THROWS_AS(metrics::trustworthiness(x, x, 0), ParameterError);
}

TEST_CASE("continuity is trustworthiness with roles swapped") {
  const RowMatrix x = random_cloud(15, 3, 5);
  const RowMatrix y = random_cloud(15, 2, 6);
  CHECK(metrics::continuity(x, y, 4) ==
        doctest::Approx(metrics::trustworthiness(y, x, 4)).epsilon(1e-15));
  CHECK(metrics::continuity(x, x, 4) == doctest::Approx(1.0));

  RowMatrix line(4, 1), swapped(4, 1);
  line << 0.0, 1.0, 2.0, 3.0;
  swapped << 0.0, 2.0, 1.0, 3.0;
  CHECK(metrics::continuity(line, swapped, 1) ==
        doctest::Approx(oracle::continuity(line, swapped, 1)).epsilon(1e-12));
}

TEST_CASE("knn_accuracy blobs, alternating line, single class") {
  Rng rng(9);
  RowMatrix blobs(40, 2);
  std::vector<Index> blob_labels(40);
  for (Index i = 0; i < 40; ++i) {
    blob_labels[i] = i < 20 ? 0 : 1;
    blobs(i, 0) = rng.normal() + (i < 20 ? 0.0 : 100.0);
    blobs(i, 1) = rng.normal();
  }
  CHECK(metrics::knn_accuracy(blobs, blob_labels, 5) == doctest::Approx(1.0));

  RowMatrix line(8, 1);
  std::vector<Index> alternating(8);
  for (Index i = 0; i < 8; ++i) {
    line(i, 0) = static_cast<Scalar>(i);
    alternating[i] = i % 2;
  }
  CHECK(metrics::knn_accuracy(line, alternating, 2) ==
        doctest::Approx(oracle::knn_accuracy(line, alternating, 2)));

  std::vector<Index> mono(8, 7);
  CHECK(metrics::knn_accuracy(line, mono, 3) == doctest::Approx(1.0));

  std::vector<Index> short_labels(3);
  CHECK_THROWS_AS(metrics::knn_accuracy(line, short_labels, 2),
                  ParameterError);
}

TEST_CASE("shepard_goodness monotone, antitone, oracle") {
  const RowMatrix x = random_cloud(20, 3, 11);
  CHECK(metrics::shepard_goodness(x, RowMatrix(2.0 * x)) ==
        doctest::Approx(1.0));

  // shrinking the middle gap swaps two distance ranks
  RowMatrix a(3, 1), c(3, 1);
  a << 0.0, 1.0, 3.0;
  c << 0.0, 2.0, 3.0;
  CHECK(metrics::shepard_goodness(a, c) ==
        doctest::Approx(oracle::shepard_goodness(a, c)).epsilon(1e-12));

  const RowMatrix y = random_cloud(20, 2, 12);
  CHECK(metrics::shepard_goodness(x, y) ==
        doctest::Approx(oracle::shepard_goodness(x, y)).epsilon(1e-12));

  // reordering the embedded line reverses every distance rank
  RowMatrix u(3, 1), v(3, 1);
  u << 0.0, 1.0, 3.0;  // pair distances 1, 2, 3
  v << 0.0, 5.0, 2.0;  // pair distances 5, 3, 2
  CHECK(metrics::shepard_goodness(u, v) == doctest::Approx(-1.0));

  // coincident embedding: every distance rank ties, zero variance
  const RowMatrix flat = RowMatrix::Zero(3, 2);
  CHECK(metrics::shepard_goodness(RowMatrix(x.topRows(3)), flat) ==
        doctest::Approx(0.0));
}

TEST_CASE("normalized_stress identity, scaling, oracle") {
  const RowMatrix x = random_cloud(18, 3, 21);
  CHECK(metrics::normalized_stress(x, x) == doctest::Approx(0.0));
  CHECK(metrics::normalized_stress(x, RowMatrix(2.0 * x)) ==
        doctest::Approx(1.0));
  const RowMatrix y = random_cloud(18, 2, 22);
  CHECK(metrics::normalized_stress(x, y) ==
        doctest::Approx(oracle::normalized_stress(x, y)).epsilon(1e-12));

  RowMatrix zeros = RowMatrix::Zero(4, 2);
  CHECK_THROWS_AS(metrics::normalized_stress(zeros, y.topRows(4)),
                  ParameterError);
}

TEST_CASE("centroid_triplet_accuracy identity, rotation, swap fixture") {
  Rng rng(31);
  RowMatrix x(24, 2);
  std::vector<Index> labels(24);
  for (Index i = 0; i < 24; ++i) {
    labels[i] = i / 6;
    x(i, 0) = rng.normal() + 10.0 * static_cast<Scalar>(i / 6);
    x(i, 1) = rng.normal() + 3.0 * static_cast<Scalar>((i / 6) % 2);
  }
  CHECK(metrics::centroid_triplet_accuracy(x, x, labels) ==
        doctest::Approx(1.0));
  CHECK(metrics::centroid_triplet_accuracy(x, rotate2(x, 1.1), labels) ==
        doctest::Approx(1.0));

  // embedding that drags class 3's centroid next to class 0
  RowMatrix y = x;
  for (Index i = 18; i < 24; ++i) y.row(i) = x.row(i - 18);
  CHECK(metrics::centroid_triplet_accuracy(x, y, labels) ==
        doctest::Approx(oracle::centroid_triplet_accuracy(x, y, labels))
            .epsilon(1e-12));
  CHECK(metrics::centroid_triplet_accuracy(x, y, labels) < 1.0);

  std::vector<Index> two_classes(24);
  for (Index i = 0; i < 24; ++i) two_classes[i] = i % 2;
  CHECK_THROWS_AS(metrics::centroid_triplet_accuracy(x, x, two_classes),
                  ParameterError);
}

TEST_CASE("metrics agree with oracles on random fixtures") {
  Rng seeds(77);
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 10 + static_cast<Index>(seeds.index(21)); // 10..30
    const RowMatrix x = random_cloud(m, 4, 100 + trial);
    const RowMatrix y = random_cloud(m, 2, 200 + trial);
    const Index k = 3;
    std::vector<Index> labels(m);
    for (Index i = 0; i < m; ++i) {
      labels[i] = static_cast<Index>(seeds.index(4));
    }

    CHECK(metrics::trustworthiness(x, y, k) ==
          doctest::Approx(oracle::trustworthiness(x, y, k)).epsilon(1e-10));
    CHECK(metrics::continuity(x, y, k) ==
          doctest::Approx(oracle::continuity(x, y, k)).epsilon(1e-10));
    CHECK(metrics::knn_accuracy(y, labels, k) ==
          doctest::Approx(oracle::knn_accuracy(y, labels, k))
              .epsilon(1e-10));
    CHECK(metrics::shepard_goodness(x, y) ==
          doctest::Approx(oracle::shepard_goodness(x, y)).epsilon(1e-10));
    CHECK(metrics::normalized_stress(x, y) ==
          doctest::Approx(oracle::normalized_stress(x, y)).epsilon(1e-10));
    bool three_classes = false;
    {
      std::set<Index> uniq(labels.begin(), labels.end());
      three_classes = uniq.size() >= 3;
    }
    if (three_classes) {
      CHECK(metrics::centroid_triplet_accuracy(x, y, labels) ==
            doctest::Approx(oracle::centroid_triplet_accuracy(x, y, labels))
                .epsilon(1e-10));
    }
  }
}

TEST_CASE("evaluate aggregates and tolerates missing labels") {
  const RowMatrix x = random_cloud(20, 4, 300);
  const RowMatrix y = random_cloud(20, 2, 301);
  std::vector<Index> labels(20);
  for (Index i = 0; i < 20; ++i) labels[i] = i % 4;

  auto report = metrics::evaluate(x, y, &labels, 4);
  CHECK(report.k == 4);
  CHECK(report.m == 20);
  CHECK(report.trustworthiness ==
        doctest::Approx(metrics::trustworthiness(x, y, 4)));
  CHECK(report.continuity == doctest::Approx(metrics::continuity(x, y, 4)));
  CHECK(report.knn_accuracy ==
        doctest::Approx(metrics::knn_accuracy(y, labels, 4)));
  CHECK(report.shepard_goodness ==
        doctest::Approx(metrics::shepard_goodness(x, y)));
  CHECK(report.normalized_stress ==
        doctest::Approx(metrics::normalized_stress(x, y)));
  CHECK(report.centroid_triplet_accuracy ==
        doctest::Approx(metrics::centroid_triplet_accuracy(x, y, labels)));

  auto blind = metrics::evaluate(x, y, nullptr, 4);
  CHECK(std::isnan(blind.knn_accuracy));
  CHECK(std::isnan(blind.centroid_triplet_accuracy));
  CHECK(blind.trustworthiness == doctest::Approx(report.trustworthiness));

  // fewer than 3 classes disables only the centroid metric
  std::vector<Index> pair_labels(20);
  for (Index i = 0; i < 20; ++i) pair_labels[i] = i % 2;
  auto two = metrics::evaluate(x, y, &pair_labels, 4);
  CHECK(std::isnan(two.centroid_triplet_accuracy));
  CHECK(two.knn_accuracy ==
        doctest::Approx(metrics::knn_accuracy(y, pair_labels, 4)));
}

TEST_CASE("subsampled pair metrics stay in range at large m") {
  // m = 1500 crosses the 1e6 pair threshold
  const RowMatrix x = random_cloud(1500, 3, 400);
  RowMatrix y = x.leftCols(2);
  const Scalar sg = metrics::shepard_goodness(x, y);
  CHECK(sg >= -1.0);
  CHECK(sg <= 1.0);
  CHECK(sg > 0.5); // projection of a near-isotropic cloud keeps rank order
  const Scalar ns = metrics::normalized_stress(x, y);
  CHECK(ns >= 0.0);
  CHECK(ns < 1.0);
  // deterministic across calls
  CHECK(metrics::shepard_goodness(x, y) == doctest::Approx(sg));
}
