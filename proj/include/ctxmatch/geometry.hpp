#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ctxmatch {

// Axis-aligned box in continuous pixel coordinates. Area is (x2-x1)*(y2-y1),
// no +1 pixel convention.
class BBox {
 public:
  // Throws std::invalid_argument unless all coordinates are finite and the
  // box has strictly positive width and height.
  BBox(double x1, double y1, double x2, double y2);

  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double x2() const noexcept { return x2_; }
  double y2() const noexcept { return y2_; }
  double width() const noexcept { return x2_ - x1_; }
  double height() const noexcept { return y2_ - y1_; }
  double area() const noexcept { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x1_, y1_, x2_, y2_;
};

// Intersection over union, in [0, 1]. Disjoint boxes give 0.
double iou(const BBox& a, const BBox& b) noexcept;

struct ScoredBox {
  BBox box;
  double score;
};

// Greedy non-maximum suppression. Returns indices into `boxes` of the kept
// entries, ordered by descending score (ties keep input order). A box is
// discarded iff its IoU with an already kept box is strictly greater than
// `threshold`.
std::vector<std::size_t> nms_indices(std::span<const ScoredBox> boxes, double threshold);

std::vector<ScoredBox> nms(std::span<const ScoredBox> boxes, double threshold);

}  // namespace ctxmatch
