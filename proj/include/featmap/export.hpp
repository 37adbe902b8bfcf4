#ifndef FEATMAP_EXPORT_HPP
#define FEATMAP_EXPORT_HPP

#include <string>
#include <vector>

#include "featmap/frame_embed.hpp"
#include "featmap/projection.hpp"
#include "featmap/types.hpp"

namespace featmap::io {

// Nearest double to the 9-significant-digit decimal rendering of v; the
// precision every emitted file uses.
Scalar round9(Scalar v);

// Emits embedding.csv, frames.json, importance.csv and diagnostics.json into
// dir (created if missing). labels add a label column to embedding.csv;
// feature_names title the importance columns (default f1..fn).
void write_embedding(const projection::EmbeddingResult &result,
                     const std::string &dir,
                     const std::vector<Index> *labels = nullptr,
                     const std::vector<std::string> *feature_names = nullptr);

frames::FrameField read_frames(const std::string &path);

// Frame overlay for one highlighted point of a 2-d scatter.
struct FocusGlyph {
  Index point = -1;
  Matrix rotation;                  // 2 x 2, columns are the axes
  Vector singular_values;           // axis lengths before normalization
  Vector importance;                // per input feature
  std::vector<std::string> names;   // aligned with importance
};

// One circle per point, palette keyed by label. A focus adds the two frame
// axes as lines plus the top-10 feature names by importance as the only
// text elements. Only d' = 2 embeddings are renderable.
void render_scatter_svg(const Matrix &y, const std::vector<Index> *labels,
                        const FocusGlyph *focus, const std::string &path);

} // namespace featmap::io

#endif
