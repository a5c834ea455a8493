#include "ctxmatch/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ctxmatch {

const std::vector<GtBox>& GroundTruth::boxes(const std::string& image_id) const {
  const auto it = per_image.find(image_id);
  if (it == per_image.end()) throw std::out_of_range("ground truth has no image '" + image_id + "'");
  return it->second;
}

double EvalReport::top1() const {
  for (std::size_t i = 0; i < cmc_k.size(); ++i) {
    if (cmc_k[i] == 1) return cmc[i];
  }
  throw std::logic_error("EvalReport: CMC top-1 not computed");
}

bool is_true_positive(const SearchResult& r, const std::string& identity, const GroundTruth& gt,
                      double iou_threshold) {
  if (!r.has_candidates()) return false;
  for (const auto& b : gt.boxes(r.image_id)) {
    if (b.identity == identity && iou(r.matched->box, b.box) >= iou_threshold) return true;
  }
  return false;
}

namespace {

const std::string& require_identity(const QueryTruth& qt, std::size_t qi) {
  if (!qt.identity) throw ProtocolError("query " + std::to_string(qi) + " has no identity label");
  if (qt.gallery_images.empty()) {
    throw ProtocolError("query " + std::to_string(qi) + ": identity '" + *qt.identity +
                        "' does not appear in any gallery image");
  }
  return *qt.identity;
}

void check_alignment(std::size_t n_results, const GroundTruth& gt) {
  if (n_results != gt.per_query.size()) {
    throw std::invalid_argument("evaluation: " + std::to_string(n_results) + " result lists for " +
                                std::to_string(gt.per_query.size()) + " queries");
  }
}

// Hit flags in rank order. Each image (hence each ground-truth box) is
// credited at most once.
std::vector<char> ranked_hits(const std::vector<SearchResult>& results, const std::string& identity,
                              const GroundTruth& gt, double iou_threshold) {
  std::vector<char> hits;
  std::set<std::string> credited;
  for (const auto& r : rank_results(results)) {
    const bool tp = is_true_positive(r, identity, gt, iou_threshold) && credited.insert(r.image_id).second;
    hits.push_back(tp ? 1 : 0);
  }
  return hits;
}

}  // namespace

SearchMetrics search_map(std::span<const std::vector<SearchResult>> results, const GroundTruth& gt,
                         double iou_threshold) {
  check_alignment(results.size(), gt);
  SearchMetrics out;
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    const QueryTruth& qt = gt.per_query[qi];
    const std::string& identity = require_identity(qt, qi);
    const auto hits = ranked_hits(results[qi], identity, gt, iou_threshold);
    double ap = 0.0;
    std::size_t found = 0;
    for (std::size_t rank = 0; rank < hits.size(); ++rank) {
      if (!hits[rank]) continue;
      ++found;
      ap += static_cast<double>(found) / static_cast<double>(rank + 1);
    }
    out.per_query_ap.push_back(ap / static_cast<double>(qt.gallery_images.size()));
  }
  if (!out.per_query_ap.empty()) {
    out.map = std::accumulate(out.per_query_ap.begin(), out.per_query_ap.end(), 0.0) /
              static_cast<double>(out.per_query_ap.size());
  }
  return out;
}

std::vector<double> cmc_topk(std::span<const std::vector<SearchResult>> results, const GroundTruth& gt,
                             std::span<const std::size_t> ks, double iou_threshold) {
  check_alignment(results.size(), gt);
  for (std::size_t k : ks) {
    if (k == 0) throw std::invalid_argument("cmc_topk: k must be >= 1");
  }
  std::vector<double> cmc(ks.size(), 0.0);
  if (results.empty()) return cmc;
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    const std::string& identity = require_identity(gt.per_query[qi], qi);
    const auto hits = ranked_hits(results[qi], identity, gt, iou_threshold);
    const auto first = std::find(hits.begin(), hits.end(), 1);
    if (first == hits.end()) continue;
    const auto rank = static_cast<std::size_t>(first - hits.begin());
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (rank < ks[i]) cmc[i] += 1.0;
    }
  }
  for (double& c : cmc) c /= static_cast<double>(results.size());
  return cmc;
}

DetectionMetrics detection_metrics(std::span<const GalleryImage> images, const GroundTruth& gt,
                                   double iou_threshold) {
  struct Candidate {
    std::size_t image;
    std::size_t det;
    double score;
  };
  std::vector<Candidate> cands;
  std::vector<const std::vector<GtBox>*> truth;
  std::size_t total_gt = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto it = gt.per_image.find(images[i].image_id);
    if (it == gt.per_image.end()) {
      throw std::invalid_argument("detection_metrics: image '" + images[i].image_id + "' missing from ground truth");
    }
    truth.push_back(&it->second);
    total_gt += it->second.size();
    for (std::size_t d = 0; d < images[i].detections.size(); ++d) {
      cands.push_back({i, d, effective_score(images[i].detections[d])});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<std::vector<char>> used(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) used[i].assign(truth[i]->size(), 0);

  std::vector<char> tp;
  std::size_t matched = 0;
  for (const auto& c : cands) {
    const BBox& box = images[c.image].detections[c.det].box;
    const auto& boxes = *truth[c.image];
    std::optional<std::size_t> best;
    double best_iou = iou_threshold;
    for (std::size_t g = 0; g < boxes.size(); ++g) {
      if (used[c.image][g]) continue;
      const double v = iou(box, boxes[g].box);
      if (v >= best_iou && (!best || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best) {
      used[c.image][*best] = 1;
      ++matched;
    }
    tp.push_back(best ? 1 : 0);
  }

  DetectionMetrics out;
  if (total_gt == 0) return out;
  out.recall = static_cast<double>(matched) / static_cast<double>(total_gt);

  // Precision envelope from the right, then integrate over recall steps.
  std::vector<double> precision(tp.size()), recall(tp.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += static_cast<std::size_t>(tp[i]);
    precision[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(hits) / static_cast<double>(total_gt);
  }
  for (std::size_t i = tp.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (recall[i] > prev_recall) {
      out.ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return out;
}

}  // namespace ctxmatch
