#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxmatch/cbgm.hpp"
#include "ctxmatch/geometry.hpp"
#include "ctxmatch/similarity.hpp"

namespace ctxmatch {

// Evaluation conventions, written into every report header.
inline constexpr double kDefaultIouThreshold = 0.5;
inline constexpr const char* kProtocolName = "ctxmatch-eval/1";
inline constexpr const char* kSearchApConvention =
    "precision at each true positive rank / gallery occurrences of the identity";
inline constexpr const char* kDetectionApConvention = "all-point interpolated precision-recall area";

struct GtBox {
  BBox box;
  std::string identity;
  friend bool operator==(const GtBox&, const GtBox&) = default;
};

// What a query is looking for. `identity` is empty if the query person has
// no label; `gallery_images` lists the other images that contain it.
struct QueryTruth {
  std::optional<std::string> identity;
  std::vector<std::string> gallery_images;
  friend bool operator==(const QueryTruth&, const QueryTruth&) = default;
};

struct GroundTruth {
  std::map<std::string, std::vector<GtBox>> per_image;
  std::vector<QueryTruth> per_query;

  // Throws std::out_of_range for an unknown image.
  const std::vector<GtBox>& boxes(const std::string& image_id) const;
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// Raised for inputs that break the evaluation protocol, e.g. a query whose
// identity never appears in its gallery.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SearchMetrics {
  std::vector<double> per_query_ap;
  double map = 0.0;
};

// Whether `r` hits a ground-truth box of `identity` with IoU >= threshold.
bool is_true_positive(const SearchResult& r, const std::string& identity, const GroundTruth& gt,
                      double iou_threshold = kDefaultIouThreshold);

// One entry of `results` per query, aligned with gt.per_query. Each entry is
// the full gallery result list; it is ranked here with rank_results.
SearchMetrics search_map(std::span<const std::vector<SearchResult>> results, const GroundTruth& gt,
                         double iou_threshold = kDefaultIouThreshold);

// Fraction of queries with a true positive within the top k, for each k.
std::vector<double> cmc_topk(std::span<const std::vector<SearchResult>> results, const GroundTruth& gt,
                             std::span<const std::size_t> ks, double iou_threshold = kDefaultIouThreshold);

struct DetectionMetrics {
  double recall = 0.0;
  double ap = 0.0;
};

// Greedy one-to-one matching of all detections (descending effective score,
// ties by image then detection order) to unmatched ground-truth boxes of the
// same image, taking the highest-IoU box at or above the threshold.
DetectionMetrics detection_metrics(std::span<const GalleryImage> images, const GroundTruth& gt,
                                   double iou_threshold = kDefaultIouThreshold);

struct EvalReport {
  double map = 0.0;
  std::vector<std::size_t> cmc_k;
  std::vector<double> cmc;
  double detection_recall = 0.0;
  double detection_ap = 0.0;
  std::vector<double> per_query_ap;
  double iou_threshold = kDefaultIouThreshold;

  double top1() const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

}  // namespace ctxmatch
