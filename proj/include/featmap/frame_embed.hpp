#ifndef FEATMAP_FRAME_EMBED_HPP
#define FEATMAP_FRAME_EMBED_HPP

#include <cstdint>
#include <vector>

#include "featmap/knn_graph.hpp"
#include "featmap/tangent.hpp"
#include "featmap/types.hpp"

namespace featmap::frames {

// Symmetric fuzzy weights on the cosine distance between neighboring tangent
// frames; same support as the point kNN graph.
using TangentSimilarity = graph::SimilarityGraph;

// Embedded per-point frames together with the retained singular values of the
// original tangent spaces (zero-padded when a local dimension is smaller).
struct FrameField {
  std::vector<Matrix> rotations;  // m matrices, d' x d' orthogonal
  RowMatrix singular_values;      // m x d'
  Index fallback_count = 0;       // frames replaced by identity

  Index size() const { return static_cast<Index>(rotations.size()); }
  Index dim() const { return rotations.empty() ? 0 : rotations[0].rows(); }
};

// Per-row cosine distances 1 - cos(Theta) over the kNN edge set, calibrated
// with the same smooth-kNN bandwidth target as the point graph and
// symmetrized by fuzzy union. Frames are conformed to dimension d first.
TangentSimilarity tangent_similarities(
    const std::vector<tangent::TangentFrame> &frame_list,
    const graph::NeighborLists &neighbors, Index d, int threads = 1);

// Random start for the frame optimizer: m rows of d'^2 i.i.d. normal entries
// scaled by 1e-2. Deterministic for a fixed seed.
RowMatrix init_frames(Index m, Index d_prime, std::uint64_t seed);

// Edge-set KL divergence sum_e P (log P - log Q) with the heavy-tailed kernel
// Q = (1 + a (1-cos)^2b)^-1 on flattened frames.
Scalar kl_divergence(const TangentSimilarity &sim, const RowMatrix &flat,
                     Scalar a, Scalar b);

struct FrameOptResult {
  RowMatrix flat;             // optimized raw frames, m x d'^2
  Scalar initial_kl = 0;      // before the first epoch
  std::vector<Scalar> kl;     // after each epoch
};

// Edge-sampling SGD on the flattened frames: attraction on edges drawn
// proportionally to their weight, uniform negative samples for repulsion,
// gradients chained through the Frobenius cosine.
FrameOptResult optimize_frames(const TangentSimilarity &sim, RowMatrix flat,
                               Index epochs, Scalar a, Scalar b,
                               Index neg_samples, std::uint64_t seed);

// Nearest orthogonal matrix (polar factor) of each raw frame; singular raw
// matrices fall back to the identity. Retained singular values are copied
// from the original frames' top d'.
FrameField orthonormalize(const RowMatrix &flat,
                          const std::vector<tangent::TangentFrame> &originals,
                          Index d_prime);

} // namespace featmap::frames

#endif
