#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxmatch/assignment.hpp"
#include "ctxmatch/similarity.hpp"

namespace ctxmatch {

// k1: number of gallery images re-ranked by context matching.
// k2: maximum size of the query-side vertex set, the query person included.
struct CbgmParams {
  std::size_t k1 = 10;
  std::size_t k2 = 3;

  // Throws std::invalid_argument if k2 == 0.
  void validate() const;
};

struct MatchedPerson {
  std::size_t index;  // detection index within the gallery image
  BBox box;
  friend bool operator==(const MatchedPerson&, const MatchedPerson&) = default;
};

// Answer for one (query, gallery image) pair. `matched` is empty when the
// gallery image has no detections; such results never enter a ranking.
struct SearchResult {
  std::string image_id;
  std::optional<MatchedPerson> matched;
  double similarity = 0.0;
  bool revised = false;  // context matching picked a different person than the baseline

  bool has_candidates() const noexcept { return matched.has_value(); }
  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

using GalleryRefs = std::vector<const GalleryImage*>;

GalleryRefs refs_of(std::span<const GalleryImage> galleries);

// Single-point matching for every gallery image, in gallery order.
std::vector<SearchResult> baseline_search(const Detection& q, const GalleryRefs& galleries);

// Query-side vertex set: q_index first, then the other detections of the
// query image by descending effective score (ties by index), k2 in total.
std::vector<std::size_t> context_set(const GalleryImage& query_image, std::size_t q_index, std::size_t k2);

// Indices of the k1 best results by similarity (ties by position). Results
// without candidates are never selected.
std::vector<std::size_t> top_k_results(const std::vector<SearchResult>& results, std::size_t k1);

// Cosine similarities between the context persons (rows) and every person
// of `g` (columns).
WeightMatrix context_weights(const GalleryImage& query_image, const std::vector<std::size_t>& context,
                             const GalleryImage& g);

// Ranking over a result list: candidates only, descending similarity, ties
// by position.
struct RankEntry {
  double similarity;
  std::size_t position;
  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};
using Ranking = std::vector<RankEntry>;

Ranking rank_order(const std::vector<SearchResult>& results);

// Context matching on the first k1 entries of `ranking`. Updates those
// entries of `results` in place and restores the ranking order with a
// linear merge, so the cost beyond the matchings is independent of k1's
// share of the gallery.
void cbgm_rerank_ranked(const GalleryImage& query_image, std::size_t q_index, const GalleryRefs& galleries,
                        std::vector<SearchResult>& results, Ranking& ranking, const CbgmParams& params);

// Re-ranks the top-k1 entries of a baseline result list by context matching.
// `baseline` must be baseline_search output for the same query and galleries.
std::vector<SearchResult> cbgm_rerank(const GalleryImage& query_image, std::size_t q_index,
                                      const GalleryRefs& galleries, std::vector<SearchResult> baseline,
                                      const CbgmParams& params);

// Full search: baseline pass followed by cbgm_rerank. One result per
// gallery image, in gallery order.
std::vector<SearchResult> cbgm_search(const GalleryImage& query_image, std::size_t q_index,
                                      const GalleryRefs& galleries, const CbgmParams& params);

// Results with candidates sorted by descending similarity; ties keep the
// input (gallery) order.
std::vector<SearchResult> rank_results(std::vector<SearchResult> results);

}  // namespace ctxmatch
