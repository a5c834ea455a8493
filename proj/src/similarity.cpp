#include "ctxmatch/similarity.hpp"

#include <algorithm>
#include <cmath>

namespace ctxmatch {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)), norm_(0.0) {
  if (values_.empty()) throw std::invalid_argument("Embedding: empty vector");
  double sq = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("Embedding: non-finite component");
    sq += v * v;
  }
  norm_ = std::sqrt(sq);
  if (!(norm_ > 0.0) || !std::isfinite(norm_)) throw std::invalid_argument("Embedding: zero or overflowing norm");
}

void validate(const Detection& d) {
  auto in_unit = [](double s) { return s >= 0.0 && s <= 1.0; };
  if (!in_unit(d.score_first) || !in_unit(d.score_second)) {
    throw std::invalid_argument("Detection: scores must lie in [0, 1]");
  }
}

double cosine_sim(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("cosine_sim: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()) + ")");
  }
  const auto x = a.values();
  const auto y = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return std::clamp(dot / (a.norm() * b.norm()), -1.0, 1.0);
}

TopMatch single_point_top1(const Detection& q, const GalleryImage& g) {
  if (g.detections.empty()) throw NoCandidatesError("no candidates in gallery image '" + g.image_id + "'");
  TopMatch best{0, cosine_sim(q.embedding, g.detections[0].embedding)};
  for (std::size_t i = 1; i < g.detections.size(); ++i) {
    const double s = cosine_sim(q.embedding, g.detections[i].embedding);
    if (s > best.similarity) best = {i, s};
  }
  return best;
}

double image_similarity(const Detection& q, const GalleryImage& g) { return single_point_top1(q, g).similarity; }

}  // namespace ctxmatch
