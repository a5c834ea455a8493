#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxmatch/geometry.hpp"

namespace ctxmatch {

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

// Raised when a gallery image has no detections to match against.
class NoCandidatesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Appearance feature of one detected person. Stored as given; cosine_sim
// normalizes on the fly.
class Embedding {
 public:
  // Throws std::invalid_argument on an empty, non-finite, or all-zero vector.
  explicit Embedding(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  double norm() const noexcept { return norm_; }

  friend bool operator==(const Embedding& a, const Embedding& b) { return a.values_ == b.values_; }

 private:
  std::vector<double> values_;
  double norm_;
};

struct Detection {
  BBox box;
  double score_first;   // first-head classification score
  double score_second;  // second-head classification score
  Embedding embedding;
  std::optional<std::string> identity;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Checks score ranges; throws std::invalid_argument.
void validate(const Detection& d);

struct GalleryImage {
  std::string image_id;
  std::vector<Detection> detections;

  friend bool operator==(const GalleryImage&, const GalleryImage&) = default;
};

struct Query {
  std::string image_id;
  std::size_t person_index;

  friend bool operator==(const Query&, const Query&) = default;
};

// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws std::invalid_argument on
// dimension mismatch.
double cosine_sim(const Embedding& a, const Embedding& b);

// Maximum cosine similarity between q and any person in g.
double image_similarity(const Detection& q, const GalleryImage& g);

// Detection confidence used everywhere downstream: the first-head score.
inline double effective_score(const Detection& d) noexcept { return d.score_first; }

struct TopMatch {
  std::size_t index;  // detection index within the gallery image
  double similarity;

  friend bool operator==(const TopMatch&, const TopMatch&) = default;
};

// Single-point matching: the most similar person in g, lowest index on ties.
TopMatch single_point_top1(const Detection& q, const GalleryImage& g);

}  // namespace ctxmatch
