#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "featmap/cli.hpp"
#include "featmap/dataset.hpp"
#include "featmap/projection.hpp"
#include "featmap/rng.hpp"

using namespace featmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("featmap_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string &name) const {
    return (path / name).string();
  }
};

// run_metrics prints its JSON report to stdout.
struct CaptureCout {
  std::ostringstream buf;
  std::streambuf *saved;

  CaptureCout() : saved(std::cout.rdbuf(buf.rdbuf())) {}
  ~CaptureCout() { std::cout.rdbuf(saved); }
};

std::string read_raw(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t count_occurrences(const std::string &hay,
                              const std::string &needle) {
  std::size_t count = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos;
       p = hay.find(needle, p + needle.size())) {
    ++count;
  }
  return count;
}

// Three labeled blobs, small enough for fast embed runs.
void write_blobs_csv(const std::string &path, Index per_blob = 12) {
  Rng rng(404);
  std::ofstream out(path);
  out << "x,y,z,label\n";
  const Scalar cx[3] = {0.0, 10.0, 0.0};
  const Scalar cy[3] = {0.0, 0.0, 10.0};
  for (int b = 0; b < 3; ++b) {
    for (Index i = 0; i < per_blob; ++i) {
      out << cx[b] + 0.5 * rng.normal() << ',' << cy[b] + 0.5 * rng.normal()
          << ',' << 0.5 * rng.normal() << ',' << b << '\n';
    }
  }
}

std::vector<std::string> embed_args(const std::string &input,
                                    const std::string &output) {
  return {"embed",    "--input", input, "--output", output,
          "--label-column", "label", "--k", "6", "--epochs", "40",
          "--seed",   "7"};
}

} // namespace

TEST_CASE("cli defaults mirror the optimizer defaults") {
  const RunConfig cfg;
  const projection::EmbedConfig ec;
  CHECK(cfg.k == ec.k);
  CHECK(cfg.k == 15);
  CHECK(cfg.epochs == ec.epochs);
  CHECK(cfg.epochs == 500);
  CHECK(cfg.q == ec.q);
  CHECK(cfg.q == 0.3);
  CHECK(cfg.lambda == ec.lambda);
  CHECK(cfg.lambda == 0.5);
  CHECK(cfg.d_prime == ec.d_prime);
  CHECK(cfg.d_max == ec.d_max);
  CHECK(cfg.neg_samples == ec.neg_samples);
  CHECK(cfg.min_dist == ec.min_dist);
  CHECK(cfg.tau == ec.tau);
  CHECK(cfg.seed == ec.seed);
  CHECK(cfg.threads == ec.threads);
  CHECK(cfg.threads == 1);
}

TEST_CASE("usage failures exit 1") {
  CHECK(run_cli(std::vector<std::string>{}) == 1);
  CHECK(run_cli({"embed"}) == 1);
  CHECK(run_cli({"transmogrify"}) == 1);
  CHECK(run_cli({"embed", "--input", "x.csv", "--output", "o",
                 "--no-such-flag"}) == 1);
  CHECK(run_cli({"metrics", "--input", "x.csv"}) == 1);  // --output required

  const char *argv[] = {"featmap", "bogus"};
  CHECK(run_cli(2, argv) == 1);
}

TEST_CASE("embed writes artifacts and reruns byte-identical") {
  TempDir tmp;
  const auto input = tmp.file("blobs.csv");
  write_blobs_csv(input);

  CHECK(run_cli(embed_args(input, tmp.file("run1"))) == 0);
  CHECK(run_cli(embed_args(input, tmp.file("run2"))) == 0);

  for (const char *name :
       {"embedding.csv", "frames.json", "importance.csv",
        "diagnostics.json"}) {
    CHECK(fs::exists(tmp.path / "run1" / name));
    const auto a = read_raw((tmp.path / "run1" / name).string());
    const auto b = read_raw((tmp.path / "run2" / name).string());
    CHECK(a == b);
    CHECK_FALSE(a.empty());
  }

  auto emb = io::load_matrix(tmp.file("run1/embedding.csv"),
                             io::Format::csv, "label");
  CHECK(emb.size() == 36);
  CHECK(emb.dim() == 2);
  REQUIRE(emb.labels.has_value());
  CHECK((*emb.labels)[0] == 0);
  CHECK((*emb.labels)[35] == 2);

  // feature names from the input header carry into importance.csv
  auto imp = io::load_matrix(tmp.file("run1/importance.csv"),
                             io::Format::csv);
  CHECK((*imp.names)[0] == "x");
  CHECK((*imp.names)[2] == "z");
  CHECK(imp.size() == 36);

  // a different seed moves the embedding
  auto moved = embed_args(input, tmp.file("run3"));
  moved.back() = "8";
  CHECK(run_cli(moved) == 0);
  CHECK(read_raw(tmp.file("run1/embedding.csv")) !=
        read_raw(tmp.file("run3/embedding.csv")));
}

TEST_CASE("metrics scores an identity embedding as perfect") {
  TempDir tmp;
  Rng rng(11);
  RowMatrix pts(12, 2);
  for (Index i = 0; i < 12; ++i) {
    pts(i, 0) = rng.normal();
    pts(i, 1) = rng.normal();
  }
  io::write_csv(tmp.file("data.csv"), pts, {"u", "v"});
  fs::create_directories(tmp.path / "dir");
  io::write_csv(tmp.file("dir/embedding.csv"), pts, {"y1", "y2"});

  std::string captured;
  {
    CaptureCout cap;
    CHECK(run_cli({"metrics", "--input", tmp.file("data.csv"), "--output",
                   tmp.file("dir"), "--k", "3"}) == 0);
    captured = cap.buf.str();
  }
  const auto doc = nlohmann::json::parse(captured);
  CHECK(doc.at("trustworthiness").get<Scalar>() == 1.0);
  CHECK(doc.at("continuity").get<Scalar>() == 1.0);
  CHECK(doc.at("shepard_goodness").get<Scalar>() == 1.0);
  CHECK(doc.at("normalized_stress").get<Scalar>() == 0.0);
  CHECK(doc.at("knn_accuracy").is_null());  // no labels anywhere
  CHECK(doc.at("k").get<Index>() == 3);
  CHECK(doc.at("m").get<Index>() == 12);
}

TEST_CASE("metrics rejects row mismatch with exit 2") {
  TempDir tmp;
  Rng rng(12);
  RowMatrix pts(8, 2);
  for (Index i = 0; i < 8; ++i) {
    pts(i, 0) = rng.normal();
    pts(i, 1) = rng.normal();
  }
  io::write_csv(tmp.file("data.csv"), pts, {"u", "v"});
  fs::create_directories(tmp.path / "dir");
  RowMatrix fewer = pts.topRows(5);
  io::write_csv(tmp.file("dir/embedding.csv"), fewer, {"y1", "y2"});

  CHECK(run_cli({"metrics", "--input", tmp.file("data.csv"), "--output",
                 tmp.file("dir"), "--k", "2"}) == 2);
}

TEST_CASE("importance honors FEATMAP_THREADS and stays deterministic") {
  TempDir tmp;
  const auto input = tmp.file("blobs.csv");
  write_blobs_csv(input);

  CHECK(run_cli({"importance", "--input", input, "--output",
                 tmp.file("serial"), "--label-column", "label", "--k",
                 "6"}) == 0);
  setenv("FEATMAP_THREADS", "3", 1);
  const int threaded_rc =
      run_cli({"importance", "--input", input, "--output",
               tmp.file("threaded"), "--label-column", "label", "--k", "6"});
  setenv("FEATMAP_THREADS", "zero?", 1);
  const int bad_rc =
      run_cli({"importance", "--input", input, "--output", tmp.file("x"),
               "--label-column", "label", "--k", "6"});
  unsetenv("FEATMAP_THREADS");

  CHECK(threaded_rc == 0);
  CHECK(bad_rc == 1);
  CHECK(read_raw(tmp.file("serial/importance.csv")) ==
        read_raw(tmp.file("threaded/importance.csv")));

  auto imp = io::load_matrix(tmp.file("serial/importance.csv"),
                             io::Format::csv);
  CHECK(imp.size() == 36);
  CHECK(imp.dim() == 3);
  CHECK(imp.values.allFinite());
  CHECK(imp.values.minCoeff() >= 0.0);
}

TEST_CASE("render draws circles and an optional focus glyph") {
  TempDir tmp;
  const auto input = tmp.file("blobs.csv");
  write_blobs_csv(input);
  REQUIRE(run_cli(embed_args(input, tmp.file("run"))) == 0);

  CHECK(run_cli({"render", "--input", tmp.file("run")}) == 0);
  auto svg = read_raw(tmp.file("run/scatter.svg"));
  CHECK(count_occurrences(svg, "<circle") == 36);
  CHECK(count_occurrences(svg, "<line") == 0);
  // three labels, three palette entries
  CHECK(count_occurrences(svg, "#4c78a8") == 12);
  CHECK(count_occurrences(svg, "#f58518") == 12);
  CHECK(count_occurrences(svg, "#e45756") == 12);

  CHECK(run_cli({"render", "--input", tmp.file("run"), "--output",
                 tmp.file("focus.svg"), "--focus", "4"}) == 0);
  svg = read_raw(tmp.file("focus.svg"));
  CHECK(count_occurrences(svg, "<line") == 2);
  CHECK(count_occurrences(svg, "<text") == 3);  // only 3 input features
  CHECK(svg.find(">x (") != std::string::npos);

  CHECK(run_cli({"render", "--input", tmp.file("run"), "--focus", "999"}) ==
        1);
  CHECK(run_cli({"render", "--input", tmp.file("nowhere")}) == 2);
}

TEST_CASE("data and numerical failures map to exit codes") {
  TempDir tmp;

  CHECK(run_cli({"embed", "--input", tmp.file("absent.csv"), "--output",
                 tmp.file("out")}) == 2);

  {
    std::ofstream out(tmp.file("bad.csv"));
    out << "a,b\n1,oops\n";
  }
  CHECK(run_cli({"embed", "--input", tmp.file("bad.csv"), "--output",
                 tmp.file("out")}) == 2);

  CHECK(run_cli({"embed", "--input", tmp.file("bad.csv"), "--output",
                 tmp.file("out"), "--format", "parquet"}) == 1);

  // twelve coincident points: every neighborhood is rank zero
  {
    std::ofstream out(tmp.file("flat.csv"));
    out << "a,b,c\n";
    for (int i = 0; i < 12; ++i) out << "1,2,3\n";
  }
  CHECK(run_cli({"embed", "--input", tmp.file("flat.csv"), "--output",
                 tmp.file("out"), "--k", "4", "--epochs", "5"}) == 3);

  // bad config values are usage errors even with readable data
  write_blobs_csv(tmp.file("blobs.csv"));
  CHECK(run_cli({"embed", "--input", tmp.file("blobs.csv"), "--output",
                 tmp.file("out"), "--k", "99"}) == 1);
}

TEST_CASE("installed binary wires argv to the driver") {
  const std::string binary = FEATMAP_CLI_PATH;
  REQUIRE(fs::exists(binary));

  int rc = std::system((binary + " >/dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(rc));
  CHECK(WEXITSTATUS(rc) == 1);

  rc = std::system((binary + " --help >/dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(rc));
  CHECK(WEXITSTATUS(rc) == 0);
}
