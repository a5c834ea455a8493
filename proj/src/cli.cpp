#include "ctxmatch/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ctxmatch::cli {

using json = nlohmann::ordered_json;

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  params.validate();
  if (!(nms_first >= 0.0 && nms_first <= 1.0)) fail("--nms-first must lie in [0, 1]");
  if (!(nms_second >= 0.0 && nms_second <= 1.0)) fail("--nms-second must lie in [0, 1]");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) fail("--iou must lie in (0, 1]");
  for (std::size_t k : cmc_k) {
    if (k == 0) fail("--cmc-k values must be >= 1");
  }
  for (std::size_t k2 : k2_values) {
    if (k2 == 0) fail("--k2-values must be >= 1");
  }
  for (std::size_t n : gallery_sizes) {
    if (n == 0) fail("--gallery-sizes values must be >= 1");
  }
  if (bench_repeats == 0) fail("--repeats must be >= 1");
  if (preset != "default" && preset != "lookalike" && preset != "confusable") {
    fail("--preset must be one of default, lookalike, confusable");
  }
}

namespace {

// Writes to the configured file or to `out`, flushing and checking both.
template <class Writer>
void emit(const RunConfig& config, std::ostream& out, Writer&& writer) {
  if (config.output.empty()) {
    writer(out);
    out.flush();
    return;
  }
  std::ofstream file(config.output, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + config.output + "' for writing");
  writer(file);
  if (!file.flush()) throw std::runtime_error("write failed for '" + config.output + "'");
}

std::vector<std::size_t> with_top1(std::vector<std::size_t> ks) {
  if (std::find(ks.begin(), ks.end(), std::size_t{1}) == ks.end()) ks.insert(ks.begin(), 1);
  return ks;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

Dataset load_for_run(const RunConfig& config) {
  if (config.dataset.empty()) throw std::invalid_argument("--dataset is required");
  Dataset ds = load_dataset(config.dataset);
  if (config.raw_detections) ds = suppress_duplicates(ds, config.nms_first, config.nms_second);
  return ds;
}

std::vector<QueryResults> cmd_search(const RunConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const Dataset ds = load_for_run(config);
  auto results = search_dataset(ds, config.mode, config.params, config.threads);
  std::size_t revised = 0;
  for (const auto& qr : results) {
    for (const auto& r : qr.results) revised += r.revised ? 1 : 0;
  }
  log << "search: " << results.size() << " queries, mode " << to_string(config.mode);
  if (config.mode == SearchMode::cbgm) log << " (k1=" << config.params.k1 << ", k2=" << config.params.k2 << ")";
  log << ", " << revised << " revised matches\n";
  emit(config, out, [&](std::ostream& os) { write_results(std::nullopt, results, os); });
  return results;
}

EvalReport cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const Dataset ds = load_for_run(config);
  std::vector<QueryResults> results;
  if (!config.results.empty()) {
    results = load_results(config.results).queries;
  } else {
    results = search_dataset(ds, config.mode, config.params, config.threads);
  }
  const auto ks = with_top1(config.cmc_k);
  const EvalReport report = evaluate_dataset(ds, results, ks, config.iou_threshold);
  log << "evaluate: mAP " << fixed(report.map, 4);
  for (std::size_t i = 0; i < report.cmc_k.size(); ++i) log << "  top-" << report.cmc_k[i] << " " << fixed(report.cmc[i], 4);
  log << "  det-recall " << fixed(report.detection_recall, 4) << "  det-AP " << fixed(report.detection_ap, 4) << '\n';
  emit(config, out, [&](std::ostream& os) { write_results(report, results, os); });
  return report;
}

void write_sweep(const std::vector<SweepCell>& cells, std::span<const std::size_t> k1_values,
                 std::span<const std::size_t> k2_values, std::ostream& out) {
  json header;
  header["kind"] = "sweep";
  header["metric"] = "(mAP + top-1) / 2";
  header["k1"] = std::vector<std::size_t>(k1_values.begin(), k1_values.end());
  header["k2"] = std::vector<std::size_t>(k2_values.begin(), k2_values.end());
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    json j;
    j["kind"] = "cell";
    j["k1"] = c.k1;
    j["k2"] = c.k2;
    j["map"] = c.map;
    j["top1"] = c.top1;
    j["metric"] = c.metric;
    j["best"] = i == 0;
    if (c.k1 == kSmallGalleryDefaults.k1 && c.k2 == kSmallGalleryDefaults.k2) {
      j["default"] = "small-gallery";
    } else if (c.k1 == kLargeGalleryDefaults.k1 && c.k2 == kLargeGalleryDefaults.k2) {
      j["default"] = "large-gallery";
    }
    out << j.dump() << '\n';
  }
}

void print_sweep_table(const std::vector<SweepCell>& cells, std::span<const std::size_t> k1_values,
                       std::span<const std::size_t> k2_values, std::ostream& out) {
  auto find = [&](std::size_t k1, std::size_t k2) -> const SweepCell* {
    for (const auto& c : cells) {
      if (c.k1 == k1 && c.k2 == k2) return &c;
    }
    return nullptr;
  };
  out << std::setw(8) << "k2\\k1";
  for (std::size_t k1 : k1_values) out << std::setw(10) << k1;
  out << '\n';
  for (std::size_t k2 : k2_values) {
    out << std::setw(8) << k2;
    for (std::size_t k1 : k1_values) {
      const SweepCell* c = find(k1, k2);
      std::string text = c ? fixed(100.0 * c->metric, 2) : "-";
      if (c && !cells.empty() && c == &cells.front()) text += "*";
      if ((k1 == kSmallGalleryDefaults.k1 && k2 == kSmallGalleryDefaults.k2) ||
          (k1 == kLargeGalleryDefaults.k1 && k2 == kLargeGalleryDefaults.k2)) {
        text += "d";
      }
      out << std::setw(10) << text;
    }
    out << '\n';
  }
  out << "(* best cell, d default operating point; metric = 100 * (mAP + top-1) / 2)\n";
}

std::vector<SweepCell> cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const Dataset ds = load_for_run(config);
  auto cells = sweep(ds, config.k1_values, config.k2_values, config.threads, config.iou_threshold);
  print_sweep_table(cells, config.k1_values, config.k2_values, log);
  emit(config, out, [&](std::ostream& os) { write_sweep(cells, config.k1_values, config.k2_values, os); });
  return cells;
}

void write_bench(const std::vector<BenchRow>& rows, const CbgmParams& params, std::ostream& out) {
  out << json{{"kind", "bench"}, {"k1", params.k1}, {"k2", params.k2}, {"unit", "ms per query"}}.dump() << '\n';
  for (const auto& r : rows) {
    json j;
    j["kind"] = "row";
    j["gallery_size"] = r.gallery_size;
    j["queries"] = r.queries;
    j["baseline_ms"] = r.baseline_ms;
    j["cbgm_ms"] = r.cbgm_ms;
    j["overhead_ms"] = r.overhead_ms;
    out << j.dump() << '\n';
  }
}

std::vector<BenchRow> cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const Dataset ds = load_for_run(config);
  auto rows = bench(ds, config.gallery_sizes, config.params, config.bench_queries, config.bench_repeats);
  log << std::setw(10) << "gallery" << std::setw(14) << "baseline ms" << std::setw(12) << "cbgm ms" << std::setw(14)
      << "overhead ms" << '\n';
  for (const auto& r : rows) {
    log << std::setw(10) << r.gallery_size << std::setw(14) << fixed(r.baseline_ms, 3) << std::setw(12)
        << fixed(r.cbgm_ms, 3) << std::setw(14) << fixed(r.overhead_ms, 4) << '\n';
  }
  emit(config, out, [&](std::ostream& os) { write_bench(rows, config.params, os); });
  return rows;
}

Dataset cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  Dataset ds;
  if (config.preset == "lookalike") {
    ds = synth::lookalike_fixture();
  } else if (config.preset == "confusable") {
    ds = synth::generate(synth::confusable_regime(config.synth.seed));
  } else {
    ds = synth::generate(config.synth);
  }
  log << "synth: " << ds.images.size() << " images, " << ds.queries.size() << " queries, dim " << ds.embedding_dim
      << '\n';
  emit(config, out, [&](std::ostream& os) { write_dataset(ds, os); });
  return ds;
}

}  // namespace ctxmatch::cli
