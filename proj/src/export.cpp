#include "featmap/export.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "featmap/dataset.hpp"
#include "featmap/errors.hpp"

namespace featmap::io {

namespace {

using nlohmann::json;

constexpr int kSvgSize = 640;
constexpr int kSvgMargin = 40;
constexpr Scalar kPointRadius = 3.0;
constexpr Index kAnnotations = 10;

const char *const kPalette[12] = {
    "#4c78a8", "#f58518", "#e45756", "#72b7b2", "#54a24b", "#eeca3b",
    "#b279a2", "#ff9da6", "#9d755d", "#bab0ac", "#4a90d9", "#8c6d31"};

json json9(Scalar v) { return json(round9(v)); }

json json9_list(const std::vector<Scalar> &values) {
  json arr = json::array();
  for (Scalar v : values) arr.push_back(round9(v));
  return arr;
}

void write_text(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw DataError("write failure on " + path);
}

std::string svg_escape(const std::string &raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

} // namespace

Scalar round9(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

void write_embedding(const projection::EmbeddingResult &result,
                     const std::string &dir,
                     const std::vector<Index> *labels,
                     const std::vector<std::string> *feature_names) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir);

  const Index m = result.Y.rows();
  const Index dp = result.Y.cols();
  if (labels != nullptr && static_cast<Index>(labels->size()) != m) {
    throw ParameterError("write_embedding: label count mismatch");
  }

  {
    std::vector<std::string> header(dp);
    for (Index c = 0; c < dp; ++c) header[c] = "y" + std::to_string(c + 1);
    RowMatrix y = result.Y;
    write_csv((fs::path(dir) / "embedding.csv").string(), y, header, labels);
  }

  {
    json doc;
    doc["dim"] = dp;
    doc["count"] = m;
    json rotations = json::array();
    json spectra = json::array();
    for (Index i = 0; i < m; ++i) {
      json rot = json::array();
      for (Index r = 0; r < dp; ++r) {
        for (Index c = 0; c < dp; ++c) {
          rot.push_back(round9(result.field.rotations[i](r, c)));
        }
      }
      rotations.push_back(std::move(rot));
      json sv = json::array();
      for (Index l = 0; l < dp; ++l) {
        sv.push_back(round9(result.field.singular_values(i, l)));
      }
      spectra.push_back(std::move(sv));
    }
    doc["rotations"] = std::move(rotations);
    doc["singular_values"] = std::move(spectra);
    doc["fallbacks"] = result.field.fallback_count;
    write_text((fs::path(dir) / "frames.json").string(), doc.dump(2) + "\n");
  }

  {
    const Index n = result.importance.cols();
    std::vector<std::string> header(n);
    for (Index c = 0; c < n; ++c) {
      header[c] = feature_names != nullptr && c < static_cast<Index>(
                                                      feature_names->size())
                      ? (*feature_names)[c]
                      : "f" + std::to_string(c + 1);
    }
    write_csv((fs::path(dir) / "importance.csv").string(), result.importance,
              header);
  }

  {
    json doc;
    doc["config"] = {
        {"k", result.config.k},
        {"epochs", result.config.epochs},
        {"d_prime", result.config.d_prime},
        {"d_max", result.config.d_max},
        {"neg_samples", result.config.neg_samples},
        {"q", json9(result.config.q)},
        {"lambda", json9(result.config.lambda)},
        {"min_dist", json9(result.config.min_dist)},
        {"tau", json9(result.config.tau)},
        {"seed", result.config.seed},
        {"threads", result.config.threads},
    };
    doc["shape"] = {{"a", json9(result.shape.a)},
                    {"b", json9(result.shape.b)},
                    {"min_dist", json9(result.shape.min_dist)},
                    {"residual", json9(result.shape.residual)}};
    doc["global_dim"] = result.global_dim;
    doc["frame_fallbacks"] = result.field.fallback_count;
    doc["ce_initial"] = json9(result.ce_initial);
    doc["ce"] = json9_list(result.ce);
    doc["frame_kl_initial"] = json9(result.frame_kl_initial);
    doc["frame_kl"] = json9_list(result.frame_kl);
    doc["radius_correlation"] = json9(result.radius_correlation);
    write_text((fs::path(dir) / "diagnostics.json").string(),
               doc.dump(2) + "\n");
  }
}

frames::FrameField read_frames(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
  frames::FrameField field;
  try {
    const Index dp = doc.at("dim").get<Index>();
    const Index m = doc.at("count").get<Index>();
    const auto &rotations = doc.at("rotations");
    const auto &spectra = doc.at("singular_values");
    if (static_cast<Index>(rotations.size()) != m ||
        static_cast<Index>(spectra.size()) != m) {
      throw DataError(path + ": count mismatch");
    }
    field.rotations.resize(m);
    field.singular_values.resize(m, dp);
    for (Index i = 0; i < m; ++i) {
      const auto &rot = rotations[i];
      if (static_cast<Index>(rot.size()) != dp * dp) {
        throw DataError(path + ": rotation size mismatch");
      }
      field.rotations[i].resize(dp, dp);
      for (Index r = 0; r < dp; ++r) {
        for (Index c = 0; c < dp; ++c) {
          field.rotations[i](r, c) = rot[r * dp + c].get<Scalar>();
        }
      }
      const auto &sv = spectra[i];
      if (static_cast<Index>(sv.size()) != dp) {
        throw DataError(path + ": spectrum size mismatch");
      }
      for (Index l = 0; l < dp; ++l) {
        field.singular_values(i, l) = sv[l].get<Scalar>();
      }
    }
    field.fallback_count = doc.value("fallbacks", Index{0});
  } catch (const json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
  return field;
}

void render_scatter_svg(const Matrix &y, const std::vector<Index> *labels,
                        const FocusGlyph *focus, const std::string &path) {
  if (y.cols() != 2) {
    throw ParameterError("render_scatter_svg: only 2-d embeddings render");
  }
  if (y.rows() < 1) {
    throw ParameterError("render_scatter_svg: empty embedding");
  }
  if (labels != nullptr &&
      static_cast<Index>(labels->size()) != y.rows()) {
    throw ParameterError("render_scatter_svg: label count mismatch");
  }
  if (focus != nullptr) {
    if (focus->point < 0 || focus->point >= y.rows()) {
      throw ParameterError("render_scatter_svg: focus point out of range");
    }
    if (focus->rotation.rows() != 2 || focus->rotation.cols() != 2 ||
        focus->singular_values.size() != 2) {
      throw ParameterError("render_scatter_svg: focus frame must be 2 x 2");
    }
    if (focus->importance.size() !=
        static_cast<Index>(focus->names.size())) {
      throw ParameterError("render_scatter_svg: importance/name mismatch");
    }
  }

  const Scalar xmin = y.col(0).minCoeff(), xmax = y.col(0).maxCoeff();
  const Scalar ymin = y.col(1).minCoeff(), ymax = y.col(1).maxCoeff();
  const Scalar span = std::max({xmax - xmin, ymax - ymin, Scalar(1e-12)});
  const Scalar scale = static_cast<Scalar>(kSvgSize - 2 * kSvgMargin) / span;
  auto px = [&](Scalar vx) { return kSvgMargin + (vx - xmin) * scale; };
  auto py = [&](Scalar vy) {
    return static_cast<Scalar>(kSvgSize) - kSvgMargin - (vy - ymin) * scale;
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgSize
      << "\" height=\"" << kSvgSize << "\" viewBox=\"0 0 " << kSvgSize << " "
      << kSvgSize << "\">\n";

  char buf[160];
  for (Index i = 0; i < y.rows(); ++i) {
    const char *color =
        labels != nullptr ? kPalette[((*labels)[i] % 12 + 12) % 12]
                          : kPalette[0];
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.1f\" fill=\"%s\"/>\n",
                  px(y(i, 0)), py(y(i, 1)), kPointRadius, color);
    svg << buf;
  }

  if (focus != nullptr) {
    const Index i = focus->point;
    const Scalar sv_max = std::max(focus->singular_values.maxCoeff(),
                                   Scalar(1e-12));
    for (Index l = 0; l < 2; ++l) {
      // Axis length proportional to the retained singular value, the larger
      // one spanning a fifth of the data range.
      const Scalar len = 0.2 * span * focus->singular_values[l] / sv_max;
      const Scalar ex = y(i, 0) + focus->rotation(0, l) * len;
      const Scalar ey = y(i, 1) + focus->rotation(1, l) * len;
      std::snprintf(buf, sizeof(buf),
                    "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                    "stroke=\"#111111\" stroke-width=\"2\"/>\n",
                    px(y(i, 0)), py(y(i, 1)), px(ex), py(ey));
      svg << buf;
    }

    std::vector<Index> order(focus->importance.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return focus->importance[a] > focus->importance[b];
    });
    const Index shown = std::min<Index>(kAnnotations,
                                        static_cast<Index>(order.size()));
    for (Index t = 0; t < shown; ++t) {
      const Index f = order[t];
      std::snprintf(buf, sizeof(buf), "%.3g", focus->importance[f]);
      svg << "<text x=\"" << kSvgMargin << "\" y=\""
          << kSvgMargin + 14 * (t + 1) << "\" font-size=\"12\">"
          << svg_escape(focus->names[f]) << " (" << buf << ")</text>\n";
    }
  }
  svg << "</svg>\n";
  write_text(path, svg.str());
}

} // namespace featmap::io
