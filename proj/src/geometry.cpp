#include "ctxmatch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ctxmatch {

BBox::BBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw std::invalid_argument("BBox: coordinates must be finite");
  }
  if (!(x2 > x1) || !(y2 > y1)) {
    throw std::invalid_argument("BBox: degenerate box [" + std::to_string(x1) + ", " + std::to_string(y1) +
                                ", " + std::to_string(x2) + ", " + std::to_string(y2) + "]");
  }
}

double iou(const BBox& a, const BBox& b) noexcept {
  if (a == b) return 1.0;
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms_indices(std::span<const ScoredBox> boxes, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("nms: threshold must lie in [0, 1]");
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const auto& b : boxes) {
    if (!std::isfinite(b.score)) throw std::invalid_argument("nms: scores must be finite");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return boxes[l].score > boxes[r].score; });

  std::vector<std::size_t> kept;
  std::vector<char> suppressed(boxes.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t cur = order[i];
    if (suppressed[cur]) continue;
    kept.push_back(cur);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t other = order[j];
      if (!suppressed[other] && iou(boxes[cur].box, boxes[other].box) > threshold) suppressed[other] = 1;
    }
  }
  return kept;
}

std::vector<ScoredBox> nms(std::span<const ScoredBox> boxes, double threshold) {
  std::vector<ScoredBox> out;
  for (std::size_t idx : nms_indices(boxes, threshold)) out.push_back(boxes[idx]);
  return out;
}

}  // namespace ctxmatch
