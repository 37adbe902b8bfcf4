#include "featmap/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "featmap/dataset.hpp"
#include "featmap/errors.hpp"
#include "featmap/export.hpp"
#include "featmap/knn_graph.hpp"
#include "featmap/metrics.hpp"
#include "featmap/projection.hpp"
#include "featmap/tangent.hpp"

namespace featmap {

namespace {

namespace fs = std::filesystem;

std::optional<std::string> label_selector(const RunConfig &cfg) {
  if (cfg.label_column.empty()) return std::nullopt;
  return cfg.label_column;
}

projection::EmbedConfig to_embed_config(const RunConfig &cfg) {
  projection::EmbedConfig ec;
  ec.k = cfg.k;
  ec.epochs = cfg.epochs;
  ec.d_prime = cfg.d_prime;
  ec.d_max = cfg.d_max;
  ec.neg_samples = cfg.neg_samples;
  ec.q = cfg.q;
  ec.lambda = cfg.lambda;
  ec.min_dist = cfg.min_dist;
  ec.tau = cfg.tau;
  ec.seed = cfg.seed;
  ec.threads = cfg.threads;
  return ec;
}

void apply_thread_env(RunConfig &cfg) {
  const char *raw = std::getenv("FEATMAP_THREADS");
  if (raw == nullptr || *raw == '\0') return;
  int value = 0;
  const auto end = raw + std::string_view(raw).size();
  const auto result = std::from_chars(raw, end, value);
  if (result.ec != std::errc{} || result.ptr != end || value < 1) {
    throw ParameterError("FEATMAP_THREADS must be a positive integer");
  }
  cfg.threads = value;
}

// The embedding written by `embed` carries an optional trailing label
// column; load it back with the label split off when present.
io::Dataset load_embedding(const std::string &dir) {
  const std::string path = (fs::path(dir) / "embedding.csv").string();
  io::Dataset plain = io::load_matrix(path, io::Format::csv);
  if (plain.names.has_value()) {
    for (const auto &name : *plain.names) {
      if (name == "label") {
        return io::load_matrix(path, io::Format::csv, std::string("label"));
      }
    }
  }
  return plain;
}

int run_embed(const RunConfig &cfg) {
  const io::Dataset ds =
      io::load_matrix(cfg.input, io::parse_format(cfg.format),
                      label_selector(cfg));
  const auto result = projection::embed(ds.values, to_embed_config(cfg));
  io::write_embedding(result, cfg.output,
                      ds.labels ? &*ds.labels : nullptr,
                      ds.names ? &*ds.names : nullptr);
  return 0;
}

int run_metrics(const RunConfig &cfg) {
  const io::Dataset original =
      io::load_matrix(cfg.input, io::parse_format(cfg.format),
                      label_selector(cfg));
  const io::Dataset embedded = load_embedding(cfg.output);
  if (embedded.size() != original.size()) {
    throw DataError("metrics: embedding has " +
                    std::to_string(embedded.size()) + " rows, original has " +
                    std::to_string(original.size()));
  }
  const std::vector<Index> *labels =
      original.labels ? &*original.labels
                      : (embedded.labels ? &*embedded.labels : nullptr);
  const auto report =
      metrics::evaluate(original.values, embedded.values, labels, cfg.k);

  nlohmann::json doc;
  doc["trustworthiness"] = io::round9(report.trustworthiness);
  doc["continuity"] = io::round9(report.continuity);
  doc["knn_accuracy"] = io::round9(report.knn_accuracy);
  doc["shepard_goodness"] = io::round9(report.shepard_goodness);
  doc["normalized_stress"] = io::round9(report.normalized_stress);
  doc["centroid_triplet_accuracy"] =
      io::round9(report.centroid_triplet_accuracy);
  doc["k"] = report.k;
  doc["m"] = report.m;
  std::cout << doc.dump(2) << std::endl;
  return 0;
}

int run_importance(const RunConfig &cfg) {
  const io::Dataset ds =
      io::load_matrix(cfg.input, io::parse_format(cfg.format),
                      label_selector(cfg));
  if (cfg.k < 1 || cfg.k >= ds.size()) {
    throw ParameterError("importance: k must satisfy 1 <= k < m");
  }
  const auto knn = graph::build_similarity_graph(ds.values, cfg.k,
                                                 cfg.threads);
  const auto frames = tangent::local_frames(ds.values, knn.graph,
                                            knn.neighbors, cfg.d_max, cfg.tau,
                                            cfg.threads);
  const RowMatrix importance =
      tangent::importance_matrix(frames, ds.dim(), cfg.threads);

  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  if (ec) throw DataError("cannot create directory " + cfg.output);
  std::vector<std::string> header(ds.dim());
  for (Index c = 0; c < ds.dim(); ++c) {
    header[c] = ds.names && c < static_cast<Index>(ds.names->size())
                    ? (*ds.names)[c]
                    : "f" + std::to_string(c + 1);
  }
  io::write_csv((fs::path(cfg.output) / "importance.csv").string(),
                importance, header);
  return 0;
}

int run_render(const RunConfig &cfg) {
  const io::Dataset embedded = load_embedding(cfg.input);
  const Matrix y = embedded.values;

  io::FocusGlyph glyph;
  const io::FocusGlyph *focus = nullptr;
  if (cfg.focus >= 0) {
    const auto field =
        io::read_frames((fs::path(cfg.input) / "frames.json").string());
    if (cfg.focus >= field.size()) {
      throw ParameterError("render: focus point out of range");
    }
    const io::Dataset importance = io::load_matrix(
        (fs::path(cfg.input) / "importance.csv").string(), io::Format::csv);
    if (importance.size() != y.rows()) {
      throw DataError("render: importance.csv row count mismatch");
    }
    glyph.point = cfg.focus;
    glyph.rotation = field.rotations[cfg.focus];
    glyph.singular_values = field.singular_values.row(cfg.focus).transpose();
    glyph.importance = importance.values.row(cfg.focus).transpose();
    if (importance.names) {
      glyph.names = *importance.names;
    } else {
      glyph.names.resize(importance.dim());
      for (Index c = 0; c < importance.dim(); ++c) {
        glyph.names[c] = "f" + std::to_string(c + 1);
      }
    }
    focus = &glyph;
  }

  const std::string out = cfg.output.empty()
                              ? (fs::path(cfg.input) / "scatter.svg").string()
                              : cfg.output;
  io::render_scatter_svg(y, embedded.labels ? &*embedded.labels : nullptr,
                         focus, out);
  return 0;
}

void add_io_flags(CLI::App *cmd, RunConfig &cfg, bool need_output) {
  cmd->add_option("--input", cfg.input, "input path")->required();
  auto *out = cmd->add_option("--output", cfg.output, "output path");
  if (need_output) out->required();
  cmd->add_option("--format", cfg.format, "input format: csv or f32bin");
  cmd->add_option("--label-column", cfg.label_column,
                  "input column holding class labels (name or index)");
}

void add_graph_flags(CLI::App *cmd, RunConfig &cfg) {
  cmd->add_option("--k", cfg.k, "neighbors per point");
  cmd->add_option("--d-max", cfg.d_max, "cap on local tangent dimension");
  cmd->add_option("--tau", cfg.tau, "variance ratio kept by local frames");
  cmd->add_option("--threads", cfg.threads, "worker threads");
}

} // namespace

int run_cli(const std::vector<std::string> &args) {
  RunConfig cfg;
  CLI::App app{"feature-preserving manifold embedding"};
  app.require_subcommand(1);

  auto *embed = app.add_subcommand("embed", "project a dataset to d' dims");
  add_io_flags(embed, cfg, true);
  add_graph_flags(embed, cfg);
  embed->add_option("--dim", cfg.d_prime, "embedding dimension");
  embed->add_option("--epochs", cfg.epochs, "optimization epochs");
  embed->add_option("--q", cfg.q, "fraction of epochs spent on frames");
  embed->add_option("--lambda", cfg.lambda, "density preservation weight");
  embed->add_option("--min-dist", cfg.min_dist, "kernel calibration offset");
  embed->add_option("--neg-samples", cfg.neg_samples,
                    "negative samples per edge");
  embed->add_option("--seed", cfg.seed, "random seed");

  auto *met = app.add_subcommand(
      "metrics", "score an embedding directory against its input");
  add_io_flags(met, cfg, true);
  met->add_option("--k", cfg.k, "neighborhood size for rank metrics");

  auto *imp = app.add_subcommand("importance",
                                 "tangent-space feature importance only");
  add_io_flags(imp, cfg, true);
  add_graph_flags(imp, cfg);

  auto *ren = app.add_subcommand("render",
                                 "draw an embedding directory as SVG");
  ren->add_option("--input", cfg.input, "embed output directory")->required();
  ren->add_option("--output", cfg.output, "SVG path (default scatter.svg)");
  ren->add_option("--focus", cfg.focus, "point whose frame gets overlaid");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    apply_thread_env(cfg);
    if (embed->parsed()) return run_embed(cfg);
    if (met->parsed()) return run_metrics(cfg);
    if (imp->parsed()) return run_importance(cfg);
    return run_render(cfg);
  } catch (const Error &err) {
    std::cerr << "featmap: " << err.what() << '\n';
    return static_cast<int>(err.exit_code());
  } catch (const std::exception &err) {
    std::cerr << "featmap: " << err.what() << '\n';
    return static_cast<int>(ExitCode::numerical);
  }
}

int run_cli(int argc, const char *const *argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? argc - 1 : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

} // namespace featmap
