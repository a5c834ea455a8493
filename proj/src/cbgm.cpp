#include "ctxmatch/cbgm.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ctxmatch {

void CbgmParams::validate() const {
  if (k2 < 1) throw std::invalid_argument("CbgmParams: k2 must be >= 1");
}

GalleryRefs refs_of(std::span<const GalleryImage> galleries) {
  GalleryRefs refs;
  refs.reserve(galleries.size());
  for (const auto& g : galleries) refs.push_back(&g);
  return refs;
}

std::vector<SearchResult> baseline_search(const Detection& q, const GalleryRefs& galleries) {
  std::vector<SearchResult> out;
  out.reserve(galleries.size());
  for (const GalleryImage* g : galleries) {
    SearchResult r{g->image_id, std::nullopt, 0.0, false};
    if (!g->detections.empty()) {
      const TopMatch top = single_point_top1(q, *g);
      r.matched = MatchedPerson{top.index, g->detections[top.index].box};
      r.similarity = top.similarity;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::size_t> context_set(const GalleryImage& query_image, std::size_t q_index, std::size_t k2) {
  const auto& dets = query_image.detections;
  if (q_index >= dets.size()) {
    throw std::out_of_range("context_set: query index " + std::to_string(q_index) + " outside image '" +
                            query_image.image_id + "'");
  }
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (i != q_index) others.push_back(i);
  }
  std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    return effective_score(dets[a]) > effective_score(dets[b]);
  });
  std::vector<std::size_t> context{q_index};
  for (std::size_t i = 0; i < others.size() && context.size() < k2; ++i) context.push_back(others[i]);
  return context;
}

std::vector<std::size_t> top_k_results(const std::vector<SearchResult>& results, std::size_t k1) {
  // (similarity, position) pairs; a smaller position wins ties.
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].has_candidates()) keyed.emplace_back(results[i].similarity, i);
  }
  auto better = [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); };
  const std::size_t k = std::min(k1, keyed.size());
  if (k == 0) return {};
  const auto kth = keyed.begin() + static_cast<std::ptrdiff_t>(k);
  std::nth_element(keyed.begin(), kth - 1, keyed.end(), better);
  keyed.resize(k);
  std::sort(keyed.begin(), keyed.end(), better);
  std::vector<std::size_t> idx;
  idx.reserve(k);
  for (const auto& [sim, i] : keyed) idx.push_back(i);
  return idx;
}

WeightMatrix context_weights(const GalleryImage& query_image, const std::vector<std::size_t>& context,
                             const GalleryImage& g) {
  WeightMatrix w(context.size(), g.detections.size());
  for (std::size_t r = 0; r < context.size(); ++r) {
    const Embedding& e = query_image.detections[context[r]].embedding;
    for (std::size_t c = 0; c < g.detections.size(); ++c) w.set(r, c, cosine_sim(e, g.detections[c].embedding));
  }
  return w;
}

namespace {

bool ranks_before(const RankEntry& a, const RankEntry& b) {
  return a.similarity > b.similarity || (a.similarity == b.similarity && a.position < b.position);
}

}  // namespace

Ranking rank_order(const std::vector<SearchResult>& results) {
  Ranking ranking;
  ranking.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].has_candidates()) ranking.push_back({results[i].similarity, i});
  }
  std::sort(ranking.begin(), ranking.end(), ranks_before);
  return ranking;
}

void cbgm_rerank_ranked(const GalleryImage& query_image, std::size_t q_index, const GalleryRefs& galleries,
                        std::vector<SearchResult>& results, Ranking& ranking, const CbgmParams& params) {
  params.validate();
  if (results.size() != galleries.size()) {
    throw std::invalid_argument("cbgm_rerank: result count does not match gallery count");
  }
  const std::vector<std::size_t> context = context_set(query_image, q_index, params.k2);
  // With q alone on the query side the optimal matching is the argmax edge,
  // which is exactly the baseline answer.
  if (context.size() == 1) return;

  const std::size_t k = std::min(params.k1, ranking.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t gi = ranking[i].position;
    const GalleryImage& g = *galleries[gi];
    const WeightMatrix w = context_weights(query_image, context, g);
    const Matching m = km_max_weight(w);
    // Row 0 is q. If q was left on a padding column, keep the baseline.
    const auto it = std::find_if(m.edges.begin(), m.edges.end(), [](const Edge& e) { return e.row == 0; });
    if (it == m.edges.end()) continue;
    SearchResult& r = results[gi];
    r.revised = r.matched->index != it->col;
    r.matched = MatchedPerson{it->col, g.detections[it->col].box};
    r.similarity = m.confidence;
    ranking[i].similarity = m.confidence;
  }
  const auto mid = ranking.begin() + static_cast<std::ptrdiff_t>(k);
  std::sort(ranking.begin(), mid, ranks_before);
  std::inplace_merge(ranking.begin(), mid, ranking.end(), ranks_before);
}

std::vector<SearchResult> cbgm_rerank(const GalleryImage& query_image, std::size_t q_index,
                                      const GalleryRefs& galleries, std::vector<SearchResult> baseline,
                                      const CbgmParams& params) {
  Ranking ranking = rank_order(baseline);
  cbgm_rerank_ranked(query_image, q_index, galleries, baseline, ranking, params);
  return baseline;
}

std::vector<SearchResult> cbgm_search(const GalleryImage& query_image, std::size_t q_index,
                                      const GalleryRefs& galleries, const CbgmParams& params) {
  params.validate();
  if (q_index >= query_image.detections.size()) {
    throw std::out_of_range("cbgm_search: query index outside the query image");
  }
  auto baseline = baseline_search(query_image.detections[q_index], galleries);
  return cbgm_rerank(query_image, q_index, galleries, std::move(baseline), params);
}

std::vector<SearchResult> rank_results(std::vector<SearchResult> results) {
  std::vector<SearchResult> ranked;
  ranked.reserve(results.size());
  for (const auto& e : rank_order(results)) ranked.push_back(std::move(results[e.position]));
  return ranked;
}

}  // namespace ctxmatch
