#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctxmatch/cbgm.hpp"
#include "ctxmatch/dataio.hpp"
#include "ctxmatch/evaluation.hpp"

namespace ctxmatch {

enum class SearchMode { baseline, cbgm };

SearchMode parse_search_mode(const std::string& name);
std::string to_string(SearchMode mode);

// Gallery of a query: every image of the dataset except the query image.
GalleryRefs gallery_for(const Dataset& ds, const std::string& query_image_id);

// Runs every query of the dataset. Output is in query order and independent
// of `threads` (0 = all hardware threads).
std::vector<QueryResults> search_dataset(const Dataset& ds, SearchMode mode, const CbgmParams& params,
                                         std::size_t threads = 1);

// Search metrics over `results` (aligned with ds.queries) plus detection
// metrics over the dataset's detections.
EvalReport evaluate_dataset(const Dataset& ds, const std::vector<QueryResults>& results,
                            std::span<const std::size_t> cmc_k, double iou_threshold = kDefaultIouThreshold);

struct SweepCell {
  std::size_t k1;
  std::size_t k2;
  double map;
  double top1;
  double metric;  // (mAP + top-1) / 2
};

// One CBGM run per (k1, k2) pair. Cells come back sorted by descending
// metric; ties keep grid order (k1 outer, k2 inner).
std::vector<SweepCell> sweep(const Dataset& ds, std::span<const std::size_t> k1_values,
                             std::span<const std::size_t> k2_values, std::size_t threads = 1,
                             double iou_threshold = kDefaultIouThreshold);

// Operating points reported as the best settings for a 100-image gallery
// and for a large (~6000-image) gallery.
inline constexpr CbgmParams kSmallGalleryDefaults{10, 3};
inline constexpr CbgmParams kLargeGalleryDefaults{30, 4};

struct BenchRow {
  std::size_t gallery_size;
  std::size_t queries;
  double baseline_ms;  // mean per query
  double cbgm_ms;      // baseline pass + context re-ranking
  double overhead_ms;  // cbgm_ms - baseline_ms
};

// Times single-point search against CBGM per query. The baseline time covers
// scoring and ranking every gallery image; the CBGM time adds context
// matching on the ranking's top-k1 and the ranking repair. The gallery of size N is
// the first N images other than the query image, cycling through the dataset
// when it is smaller. Single-threaded.
std::vector<BenchRow> bench(const Dataset& ds, std::span<const std::size_t> gallery_sizes, const CbgmParams& params,
                            std::size_t max_queries, std::size_t repeats = 1);

}  // namespace ctxmatch
