#include "ctxmatch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "ctxmatch/parallel.hpp"

namespace ctxmatch {

SearchMode parse_search_mode(const std::string& name) {
  if (name == "baseline") return SearchMode::baseline;
  if (name == "cbgm") return SearchMode::cbgm;
  throw std::invalid_argument("unknown search mode '" + name + "' (expected baseline or cbgm)");
}

std::string to_string(SearchMode mode) { return mode == SearchMode::baseline ? "baseline" : "cbgm"; }

GalleryRefs gallery_for(const Dataset& ds, const std::string& query_image_id) {
  GalleryRefs refs;
  refs.reserve(ds.images.size());
  for (const auto& img : ds.images) {
    if (img.image_id != query_image_id) refs.push_back(&img);
  }
  return refs;
}

std::vector<QueryResults> search_dataset(const Dataset& ds, SearchMode mode, const CbgmParams& params,
                                         std::size_t threads) {
  params.validate();
  std::vector<QueryResults> out(ds.queries.size());
  parallel_for(ds.queries.size(), threads, [&](std::size_t qi) {
    const Query& q = ds.queries[qi];
    const GalleryImage& query_image = ds.images[ds.image_index(q.image_id)];
    const GalleryRefs galleries = gallery_for(ds, q.image_id);
    out[qi].query = q;
    out[qi].results = mode == SearchMode::baseline
                          ? baseline_search(query_image.detections.at(q.person_index), galleries)
                          : cbgm_search(query_image, q.person_index, galleries, params);
  });
  return out;
}

EvalReport evaluate_dataset(const Dataset& ds, const std::vector<QueryResults>& results,
                            std::span<const std::size_t> cmc_k, double iou_threshold) {
  if (results.size() != ds.queries.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(results.size()) + " result lists for " +
                                std::to_string(ds.queries.size()) + " queries");
  }
  std::vector<std::vector<SearchResult>> lists;
  lists.reserve(results.size());
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    if (!(results[qi].query == ds.queries[qi])) {
      throw std::invalid_argument("evaluate: result list " + std::to_string(qi) + " belongs to a different query");
    }
    for (const auto& r : results[qi].results) {
      if (r.image_id == results[qi].query.image_id) {
        throw ProtocolError("evaluate: query " + std::to_string(qi) + " was matched against its own image");
      }
    }
    lists.push_back(results[qi].results);
  }
  EvalReport report;
  report.iou_threshold = iou_threshold;
  const SearchMetrics sm = search_map(lists, ds.ground_truth, iou_threshold);
  report.map = sm.map;
  report.per_query_ap = sm.per_query_ap;
  report.cmc_k.assign(cmc_k.begin(), cmc_k.end());
  report.cmc = cmc_topk(lists, ds.ground_truth, cmc_k, iou_threshold);
  const DetectionMetrics dm = detection_metrics(ds.images, ds.ground_truth, iou_threshold);
  report.detection_recall = dm.recall;
  report.detection_ap = dm.ap;
  return report;
}

std::vector<SweepCell> sweep(const Dataset& ds, std::span<const std::size_t> k1_values,
                             std::span<const std::size_t> k2_values, std::size_t threads, double iou_threshold) {
  if (k1_values.empty() || k2_values.empty()) throw std::invalid_argument("sweep: empty parameter grid");
  const std::size_t top1[] = {1};
  std::vector<SweepCell> cells;
  for (std::size_t k1 : k1_values) {
    for (std::size_t k2 : k2_values) {
      const CbgmParams params{k1, k2};
      const auto results = search_dataset(ds, SearchMode::cbgm, params, threads);
      const EvalReport r = evaluate_dataset(ds, results, top1, iou_threshold);
      cells.push_back({k1, k2, r.map, r.cmc[0], (r.map + r.cmc[0]) / 2.0});
    }
  }
  std::stable_sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) { return a.metric > b.metric; });
  return cells;
}

std::vector<BenchRow> bench(const Dataset& ds, std::span<const std::size_t> gallery_sizes, const CbgmParams& params,
                            std::size_t max_queries, std::size_t repeats) {
  params.validate();
  using clock = std::chrono::steady_clock;
  const std::size_t n_queries = std::min(max_queries, ds.queries.size());
  if (n_queries == 0) throw std::invalid_argument("bench: dataset has no queries");
  if (repeats == 0) throw std::invalid_argument("bench: repeats must be >= 1");

  std::vector<BenchRow> rows;
  for (std::size_t size : gallery_sizes) {
    double baseline_total = 0.0;
    double rerank_total = 0.0;
    for (std::size_t qi = 0; qi < n_queries; ++qi) {
      const Query& q = ds.queries[qi];
      const GalleryImage& query_image = ds.images[ds.image_index(q.image_id)];
      const GalleryRefs pool = gallery_for(ds, q.image_id);
      if (pool.empty()) throw std::invalid_argument("bench: dataset has a single image");
      GalleryRefs galleries;
      galleries.reserve(size);
      for (std::size_t i = 0; i < size; ++i) galleries.push_back(pool[i % pool.size()]);

      for (std::size_t rep = 0; rep < repeats; ++rep) {
        const auto t0 = clock::now();
        auto results = baseline_search(query_image.detections[q.person_index], galleries);
        Ranking ranking = rank_order(results);
        const auto t1 = clock::now();
        cbgm_rerank_ranked(query_image, q.person_index, galleries, results, ranking, params);
        const auto t2 = clock::now();
        baseline_total += std::chrono::duration<double, std::milli>(t1 - t0).count();
        rerank_total += std::chrono::duration<double, std::milli>(t2 - t1).count();
        if (ranking.size() > galleries.size()) throw std::logic_error("bench: ranking larger than gallery");
      }
    }
    const double runs = static_cast<double>(n_queries * repeats);
    const double base_ms = baseline_total / runs;
    const double overhead_ms = rerank_total / runs;
    rows.push_back({size, n_queries, base_ms, base_ms + overhead_ms, overhead_ms});
  }
  return rows;
}

}  // namespace ctxmatch
