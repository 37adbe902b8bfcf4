#ifndef FEATMAP_METRICS_HPP
#define FEATMAP_METRICS_HPP

#include <vector>

#include "featmap/types.hpp"

namespace featmap::metrics {

// Rank-based neighborhood preservation: 1 - 2/(mk(2m-3k-1)) sum over points
// of sum over k-neighbors in Y that are not k-neighbors in X of
// (rank_X - k). Ranks are ascending by distance with index tie-break.
// Requires k < m/2.
Scalar trustworthiness(const RowMatrix &x, const RowMatrix &y, Index k);

// trustworthiness with the roles of the two spaces swapped.
Scalar continuity(const RowMatrix &x, const RowMatrix &y, Index k);

// Leave-one-out fraction of points whose k-neighbor majority label matches
// their own; vote ties resolve to the lowest label id.
Scalar knn_accuracy(const RowMatrix &y, const std::vector<Index> &labels,
                    Index k);

// Spearman rank correlation between original and embedded pairwise
// distances, average ranks on ties. Pairs are subsampled (seeded, at most
// 2000) once their count exceeds 1e6. Zero rank variance yields 0.
Scalar shepard_goodness(const RowMatrix &x, const RowMatrix &y);

// sum (d_x - d_y)^2 / sum d_x^2 over pairs, with the same subsampling rule
// as shepard_goodness. All-zero original distances are a parameter error.
Scalar normalized_stress(const RowMatrix &x, const RowMatrix &y);

// Fraction of class-centroid triplets (anchor, pair) whose distance-order
// sign is preserved by the embedding. Requires at least 3 classes.
Scalar centroid_triplet_accuracy(const RowMatrix &x, const RowMatrix &y,
                                 const std::vector<Index> &labels);

struct MetricReport {
  Scalar trustworthiness = 0.0;
  Scalar continuity = 0.0;
  Scalar knn_accuracy = 0.0;            // NaN without labels
  Scalar shepard_goodness = 0.0;
  Scalar normalized_stress = 0.0;
  Scalar centroid_triplet_accuracy = 0.0;  // NaN without 3 labeled classes
  Index k = 0;
  Index m = 0;
};

// All six measures in one pass; labels may be null, which disables the two
// label-dependent entries instead of failing.
MetricReport evaluate(const RowMatrix &x, const RowMatrix &y,
                      const std::vector<Index> *labels, Index k);

} // namespace featmap::metrics

#endif
