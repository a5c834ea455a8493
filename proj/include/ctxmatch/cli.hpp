#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctxmatch/pipeline.hpp"
#include "ctxmatch/synth.hpp"

namespace ctxmatch::cli {

struct RunConfig {
  std::string dataset;
  std::string output;   // empty: write to the output stream
  std::string results;  // evaluate: previously saved search results (optional)

  SearchMode mode = SearchMode::cbgm;
  CbgmParams params = kSmallGalleryDefaults;

  bool raw_detections = false;  // apply NMS at ingestion
  double nms_first = 0.4;
  double nms_second = 0.5;

  double iou_threshold = kDefaultIouThreshold;
  std::vector<std::size_t> cmc_k{1, 5, 10};
  std::size_t threads = 0;  // 0 = all hardware threads

  std::vector<std::size_t> k1_values{0, 10, 20, 30, 40, 50};
  std::vector<std::size_t> k2_values{1, 2, 3, 4, 5, 6};

  std::vector<std::size_t> gallery_sizes{100, 500, 1000, 2000, 4000};
  std::size_t bench_queries = 50;
  std::size_t bench_repeats = 3;

  std::string preset = "default";  // synth: default | lookalike | confusable
  synth::SynthParams synth;

  // Throws std::invalid_argument naming the offending parameter.
  void validate() const;
};

// Loads the dataset and, for raw detections, applies ingestion-time NMS.
Dataset load_for_run(const RunConfig& config);

// Each command writes its artifact to config.output (or `out` when empty)
// and returns the in-memory value. Progress lines go to `log`.
std::vector<QueryResults> cmd_search(const RunConfig& config, std::ostream& out, std::ostream& log);
EvalReport cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& log);
std::vector<SweepCell> cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log);
std::vector<BenchRow> cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& log);
Dataset cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& log);

void write_sweep(const std::vector<SweepCell>& cells, std::span<const std::size_t> k1_values,
                 std::span<const std::size_t> k2_values, std::ostream& out);
// Human-readable grid: one row per k2, one column per k1, best cell starred.
void print_sweep_table(const std::vector<SweepCell>& cells, std::span<const std::size_t> k1_values,
                       std::span<const std::size_t> k2_values, std::ostream& out);
void write_bench(const std::vector<BenchRow>& rows, const CbgmParams& params, std::ostream& out);

}  // namespace ctxmatch::cli
