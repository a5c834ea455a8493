// Command-line front end: search, evaluate, sweep, bench, synth.

#include <iostream>

#include "CLI11.hpp"
#include "ctxmatch/cli.hpp"

namespace {

using ctxmatch::cli::RunConfig;

void add_dataset_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--dataset,-d", cfg.dataset, "Dataset file (line-delimited JSON)")->required();
  cmd->add_option("--output,-o", cfg.output, "Output file (default: stdout)");
  cmd->add_flag("--raw-detections", cfg.raw_detections, "Apply NMS at ingestion (pre-NMS detections)");
  cmd->add_option("--nms-first", cfg.nms_first, "NMS IoU threshold on first-head scores")->capture_default_str();
  cmd->add_option("--nms-second", cfg.nms_second, "NMS IoU threshold on second-head scores")->capture_default_str();
  cmd->add_option("--threads,-j", cfg.threads, "Worker threads, 0 = all hardware threads")->capture_default_str();
}

void add_cbgm_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--k1", cfg.params.k1, "Gallery images re-ranked by context matching")->capture_default_str();
  cmd->add_option("--k2", cfg.params.k2, "Maximum query-side context persons (query included)")
      ->capture_default_str();
}

void add_mode_option(CLI::App* cmd, std::string& mode) {
  cmd->add_option("--mode", mode, "Search mode")->check(CLI::IsMember({"baseline", "cbgm"}))->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctxmatch: context bipartite graph matching for person search"};
  app.set_config("--config", "", "TOML/INI config file; explicit flags take precedence");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string mode = "cbgm";

  auto* search = app.add_subcommand("search", "Rank every gallery image for every query");
  add_dataset_options(search, cfg);
  add_cbgm_options(search, cfg);
  add_mode_option(search, mode);

  auto* evaluate = app.add_subcommand("evaluate", "Compute mAP, CMC and detection metrics");
  add_dataset_options(evaluate, cfg);
  add_cbgm_options(evaluate, cfg);
  add_mode_option(evaluate, mode);
  evaluate->add_option("--results", cfg.results, "Saved search results (default: run the search)");
  evaluate->add_option("--iou", cfg.iou_threshold, "IoU threshold for a true positive")->capture_default_str();
  evaluate->add_option("--cmc-k", cfg.cmc_k, "CMC ranks")->delimiter(',')->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Evaluate a grid of (k1, k2) settings");
  add_dataset_options(sweep, cfg);
  sweep->add_option("--k1-values", cfg.k1_values, "k1 grid")->delimiter(',')->capture_default_str();
  sweep->add_option("--k2-values", cfg.k2_values, "k2 grid")->delimiter(',')->capture_default_str();
  sweep->add_option("--iou", cfg.iou_threshold, "IoU threshold for a true positive")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Time baseline search against CBGM");
  add_dataset_options(bench, cfg);
  add_cbgm_options(bench, cfg);
  bench->add_option("--gallery-sizes", cfg.gallery_sizes, "Gallery sizes")->delimiter(',')->capture_default_str();
  bench->add_option("--queries", cfg.bench_queries, "Queries timed per gallery size")->capture_default_str();
  bench->add_option("--repeats", cfg.bench_repeats, "Repetitions per query")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  auto& sp = cfg.synth;
  synth->add_option("--output,-o", cfg.output, "Output file (default: stdout)");
  synth->add_option("--preset", cfg.preset, "default | lookalike | confusable")
      ->check(CLI::IsMember({"default", "lookalike", "confusable"}))
      ->capture_default_str();
  synth->add_option("--seed", sp.seed, "RNG seed")->capture_default_str();
  synth->add_option("--identities", sp.n_identities, "Number of identities")->capture_default_str();
  synth->add_option("--images", sp.n_images, "Number of images")->capture_default_str();
  synth->add_option("--group-min", sp.group_size.min, "Smallest co-walking group")->capture_default_str();
  synth->add_option("--group-max", sp.group_size.max, "Largest co-walking group")->capture_default_str();
  synth->add_option("--dim", sp.embedding_dim, "Embedding dimension")->capture_default_str();
  synth->add_option("--sigma", sp.noise_sigma, "Per-component embedding noise")->capture_default_str();
  synth->add_option("--confusable-pairs", sp.confusable_pairs, "Look-alike pairs")->capture_default_str();
  synth->add_option("--confusable-angle", sp.confusable_angle, "Look-alike separation (radians)")->capture_default_str();
  synth->add_option("--cooccurrence", sp.cooccurrence, "Probability a member joins its group's appearance")
      ->capture_default_str();
  synth->add_option("--dets-min", sp.detections_per_image.min, "Fewest detections per image")->capture_default_str();
  synth->add_option("--dets-max", sp.detections_per_image.max, "Most detections per image")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.mode = ctxmatch::parse_search_mode(mode);
    if (search->parsed()) ctxmatch::cli::cmd_search(cfg, std::cout, std::cerr);
    if (evaluate->parsed()) ctxmatch::cli::cmd_evaluate(cfg, std::cout, std::cerr);
    if (sweep->parsed()) ctxmatch::cli::cmd_sweep(cfg, std::cout, std::cerr);
    if (bench->parsed()) ctxmatch::cli::cmd_bench(cfg, std::cout, std::cerr);
    if (synth->parsed()) ctxmatch::cli::cmd_synth(cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
