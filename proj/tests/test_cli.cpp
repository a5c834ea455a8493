#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ctxmatch/cli.hpp"
#include "doctest.h"

using namespace ctxmatch;
using namespace ctxmatch::cli;

namespace {

struct Workspace {
  std::filesystem::path dir;
  Workspace() {
    dir = std::filesystem::temp_directory_path() / ("ctxmatch_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(dir);
  }
  ~Workspace() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes a small look-alike dataset and returns a config pointing at it.
RunConfig make_dataset(const Workspace& ws, const std::string& preset = "default") {
  RunConfig c;
  c.preset = preset;
  c.synth.n_identities = 60;
  c.synth.n_images = 120;
  c.synth.group_size = {2, 2};
  c.synth.embedding_dim = 32;
  c.synth.noise_sigma = 0.06;
  c.synth.confusable_pairs = 60;
  c.synth.seed = 5;
  c.output = ws.path(preset + ".jsonl");
  std::ostringstream out, log;
  cmd_synth(c, out, log);
  RunConfig run;
  run.dataset = c.output;
  run.threads = 1;
  return run;
}

}  // namespace

TEST_CASE("synth writes a loadable dataset") {
  Workspace ws;
  RunConfig c = make_dataset(ws);
  const Dataset ds = load_dataset(c.dataset);
  CHECK(ds.images.size() == 120);
  CHECK_FALSE(ds.queries.empty());
  // Without an output path the dataset goes to the stream.
  RunConfig s;
  s.preset = "lookalike";
  std::ostringstream out, log;
  const Dataset fixture = cmd_synth(s, out, log);
  std::istringstream in(out.str());
  CHECK(parse_dataset(in) == fixture);
  CHECK(log.str().starts_with("synth: 2 images, 1 queries"));
}

TEST_CASE("search writes ranked results for every query") {
  Workspace ws;
  RunConfig c = make_dataset(ws);
  c.mode = SearchMode::baseline;
  c.output = ws.path("base.jsonl");
  std::ostringstream out, log;
  const auto results = cmd_search(c, out, log);
  CHECK(out.str().empty());
  const ResultsFile file = load_results(c.output);
  CHECK_FALSE(file.report);
  REQUIRE(file.queries.size() == results.size());
  for (std::size_t q = 0; q < results.size(); ++q) {
    CHECK(file.queries[q].results == rank_results(results[q].results));
    const auto& rs = file.queries[q].results;
    for (std::size_t i = 1; i < rs.size(); ++i) CHECK(rs[i - 1].similarity >= rs[i].similarity);
  }
}

TEST_CASE("context results differ from baseline results only within the top-k1 images") {
  Workspace ws;
  RunConfig c = make_dataset(ws);
  std::ostringstream sink;
  c.mode = SearchMode::baseline;
  const auto base = cmd_search(c, sink, sink);
  c.mode = SearchMode::cbgm;
  c.params = {10, 3};
  const auto ctx = cmd_search(c, sink, sink);
  REQUIRE(base.size() == ctx.size());
  std::size_t revised = 0;
  for (std::size_t q = 0; q < base.size(); ++q) {
    const auto top = top_k_results(base[q].results, c.params.k1);
    const std::set<std::size_t> inside(top.begin(), top.end());
    for (std::size_t i = 0; i < base[q].results.size(); ++i) {
      if (inside.contains(i)) {
        revised += ctx[q].results[i].revised ? 1 : 0;
      } else {
        CHECK(ctx[q].results[i] == base[q].results[i]);
      }
    }
  }
  CHECK(revised > 0);
}

TEST_CASE("evaluate on the look-alike fixture") {
  Workspace ws;
  RunConfig s;
  s.preset = "lookalike";
  s.output = ws.path("lookalike.jsonl");
  std::ostringstream sink;
  cmd_synth(s, sink, sink);

  RunConfig c;
  c.dataset = s.output;
  c.mode = SearchMode::baseline;
  CHECK(cmd_evaluate(c, sink, sink).top1() == 0.0);
  c.mode = SearchMode::cbgm;
  c.output = ws.path("report.jsonl");
  const EvalReport report = cmd_evaluate(c, sink, sink);
  CHECK(report.top1() == 1.0);
  CHECK(report.map == 1.0);
  const ResultsFile file = load_results(c.output);
  REQUIRE(file.report);
  CHECK(file.report->map == report.map);
  CHECK(file.report->cmc == report.cmc);
  CHECK(file.report->detection_recall == report.detection_recall);
}

TEST_CASE("evaluate scores a saved results file") {
  Workspace ws;
  RunConfig c = make_dataset(ws);
  std::ostringstream sink;
  c.output = ws.path("res.jsonl");
  cmd_search(c, sink, sink);
  RunConfig e;
  e.dataset = c.dataset;
  e.results = c.output;
  e.cmc_k = {5};
  const EvalReport from_file = cmd_evaluate(e, sink, sink);
  e.results.clear();
  const EvalReport direct = cmd_evaluate(e, sink, sink);
  CHECK(from_file.map == direct.map);
  CHECK(from_file.cmc == direct.cmc);
  CHECK(from_file.cmc_k == std::vector<std::size_t>{1, 5});
}

TEST_CASE("perfect dataset evaluates to mAP 1") {
  Workspace ws;
  RunConfig s;
  s.synth.n_identities = 30;
  s.synth.n_images = 50;
  s.synth.embedding_dim = 16;
  s.synth.noise_sigma = 0.0;
  s.output = ws.path("clean.jsonl");
  std::ostringstream sink;
  cmd_synth(s, sink, sink);
  RunConfig c;
  c.dataset = s.output;
  c.mode = SearchMode::baseline;
  CHECK(cmd_evaluate(c, sink, sink).map == 1.0);
}

TEST_CASE("sweep grid") {
  Workspace ws;
  RunConfig c = make_dataset(ws);
  c.k1_values = {0, 5, 10};
  c.k2_values = {1, 2, 3};
  c.output = ws.path("sweep.jsonl");
  std::ostringstream out, log;
  const auto cells = cmd_sweep(c, out, log);
  REQUIRE(cells.size() == 9);

  std::ostringstream sink;
  RunConfig b = c;
  b.mode = SearchMode::baseline;
  b.output.clear();
  const EvalReport base = cmd_evaluate(b, sink, sink);
  for (const auto& cell : cells) {
    CHECK(cell.metric == (cell.map + cell.top1) / 2.0);
    if (cell.k1 == 0 || cell.k2 == 1) {
      CHECK(cell.map == base.map);
      CHECK(cell.top1 == base.top1());
    }
  }
  // Best cell first and flagged.
  for (const auto& cell : cells) CHECK(cells.front().metric >= cell.metric);
  std::istringstream in(slurp(c.output));
  std::string line;
  std::getline(in, line);
  CHECK(line.find("\"kind\":\"sweep\"") != std::string::npos);
  std::getline(in, line);
  CHECK(line.find("\"best\":true") != std::string::npos);
  std::size_t best_flags = 0;
  while (std::getline(in, line)) best_flags += line.find("\"best\":true") != std::string::npos;
  CHECK(best_flags == 0);
  CHECK(log.str().find('*') != std::string::npos);

  const std::string first = slurp(c.output);
  cmd_sweep(c, out, log);
  CHECK(slurp(c.output) == first);
}

TEST_CASE("bench reports overhead as the difference") {
  Workspace ws;
  RunConfig c = make_dataset(ws);
  c.gallery_sizes = {20, 200};
  c.bench_queries = 5;
  c.bench_repeats = 1;
  std::ostringstream out, log;
  const auto rows = cmd_bench(c, out, log);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.overhead_ms == doctest::Approx(r.cbgm_ms - r.baseline_ms));
    CHECK(r.queries == 5);
  }
  CHECK(rows[1].gallery_size == 200);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("raw detections are suppressed at ingestion") {
  Workspace ws;
  const std::string path = ws.path("raw.jsonl");
  {
    std::ofstream f(path);
    f << R"({"kind":"image","id":"a","detections":[{"box":[0,0,10,20],"score_first":0.95,"score_second":0.9,"embedding":[1,0],"identity":"P"},{"box":[1,0,11,20],"score_first":0.6,"score_second":0.5,"embedding":[0,1]}]})"
      << '\n'
      << R"({"kind":"image","id":"b","detections":[{"box":[0,0,10,20],"score_first":0.9,"score_second":0.9,"embedding":[0.4,-0.9165],"identity":"P"},{"box":[50,0,60,20],"score_first":0.9,"score_second":0.9,"embedding":[0.5,0.866],"identity":"Q"}]})"
      << '\n'
      << R"({"kind":"query","image_id":"a","person_index":0})" << '\n';
  }
  RunConfig c;
  c.dataset = path;
  CHECK(load_for_run(c).images[0].detections.size() == 2);
  c.raw_detections = true;
  CHECK(load_for_run(c).images[0].detections.size() == 1);
  // The unsuppressed duplicate is a context person and changes the match.
  std::ostringstream sink;
  c.raw_detections = false;
  CHECK(cmd_evaluate(c, sink, sink).top1() == 1.0);
  c.raw_detections = true;
  CHECK(cmd_evaluate(c, sink, sink).top1() == 0.0);
}

TEST_CASE("configuration and input errors") {
  RunConfig c;
  std::ostringstream sink;
  CHECK_THROWS_AS(cmd_search(c, sink, sink), std::invalid_argument);  // no dataset
  c.dataset = "/nonexistent/d.jsonl";
  CHECK_THROWS_AS(cmd_search(c, sink, sink), DataError);

  RunConfig bad;
  bad.params.k2 = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.nms_first = 1.5;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("--nms-first"), std::invalid_argument);
  bad = {};
  bad.iou_threshold = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.cmc_k = {0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.k2_values = {0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.preset = "nope";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.bench_repeats = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(RunConfig{}.validate());
  CHECK(parse_search_mode("cbgm") == SearchMode::cbgm);
  CHECK_THROWS_AS(parse_search_mode("fancy"), std::invalid_argument);
}

TEST_CASE("empty sweep grid is an error") {
  Workspace ws;
  RunConfig c = make_dataset(ws);
  c.k1_values.clear();
  std::ostringstream sink;
  CHECK_THROWS(cmd_sweep(c, sink, sink));
}
