#include <random>

#include "ctxmatch/synth.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctxmatch;

namespace {

// The look-alike scene from the synth fixture: query image {a, b},
// gallery image {c, d}.
struct Scene {
  Dataset ds = synth::lookalike_fixture();
  const GalleryImage& query() const { return ds.images[0]; }
  GalleryRefs galleries() const { return {&ds.images[1]}; }
};

}  // namespace

TEST_CASE("CbgmParams validation") {
  CHECK_THROWS_AS((CbgmParams{10, 0}).validate(), std::invalid_argument);
  CHECK_NOTHROW((CbgmParams{0, 1}).validate());
}

TEST_CASE("look-alike scene: context flips the match from d to c") {
  Scene s;
  const auto& q = s.query();
  const auto& g = s.ds.images[1];
  // Weights as constructed.
  CHECK(cosine_sim(q.detections[0].embedding, g.detections[0].embedding) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cosine_sim(q.detections[0].embedding, g.detections[1].embedding) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cosine_sim(q.detections[1].embedding, g.detections[0].embedding) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(cosine_sim(q.detections[1].embedding, g.detections[1].embedding) == doctest::Approx(0.9).epsilon(1e-12));

  const auto base = baseline_search(q.detections[0], s.galleries());
  REQUIRE(base.size() == 1);
  CHECK(base[0].matched->index == 1);  // d
  CHECK(base[0].similarity == doctest::Approx(0.6).epsilon(1e-12));

  const auto res = cbgm_search(q, 0, s.galleries(), CbgmParams{10, 3});
  REQUIRE(res.size() == 1);
  CHECK(res[0].matched->index == 0);  // c
  CHECK(res[0].revised);
  const WeightMatrix w = context_weights(q, context_set(q, 0, 3), g);
  const Matching m = km_max_weight(w);
  CHECK(m.edges == std::vector<Edge>{{0, 0}, {1, 1}});
  CHECK(res[0].similarity == m.confidence);
  CHECK(res[0].similarity == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("k2 = 1 and k1 = 0 reproduce the baseline exactly") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 30; ++t) {
    const GalleryImage q = oracle::random_image(rng, "q", 4, 8);
    std::vector<GalleryImage> gal;
    for (int i = 0; i < 12; ++i) gal.push_back(oracle::random_image(rng, "g" + std::to_string(i), 1 + i % 5, 8));
    const auto refs = refs_of(gal);
    const auto base = baseline_search(q.detections[1], refs);
    CHECK(cbgm_search(q, 1, refs, CbgmParams{10, 1}) == base);
    CHECK(cbgm_search(q, 1, refs, CbgmParams{0, 4}) == base);
  }
}

TEST_CASE("context_set keeps q first and ranks the rest by first-head score") {
  GalleryImage img{"q", {}};
  const double s1[] = {0.1, 0.9, 0.5, 0.9, 0.3};
  const double s2[] = {0.9, 0.1, 0.99, 0.2, 1.0};
  for (int i = 0; i < 5; ++i) {
    img.detections.push_back({BBox(i * 10.0, 0, i * 10.0 + 5, 10), s1[i], s2[i], Embedding({1.0, double(i)}), std::nullopt});
  }
  CHECK(context_set(img, 0, 3) == std::vector<std::size_t>{0, 1, 3});
  CHECK(context_set(img, 3, 4) == std::vector<std::size_t>{3, 1, 2, 4});
  CHECK(context_set(img, 2, 1) == std::vector<std::size_t>{2});
  CHECK(context_set(img, 4, 10).size() == 5);
  CHECK_THROWS_AS(context_set(img, 5, 3), std::out_of_range);
}

TEST_CASE("random galleries: only the top-k1 change, and they follow the brute-force matching") {
  std::mt19937_64 rng(47);
  std::uniform_int_distribution<std::size_t> count(1, 7);
  for (int t = 0; t < 25; ++t) {
    const GalleryImage q = oracle::random_image(rng, "q", 5, 6);
    std::vector<GalleryImage> gal;
    for (int i = 0; i < 20; ++i) gal.push_back(oracle::random_image(rng, "g" + std::to_string(i), count(rng), 6));
    const auto refs = refs_of(gal);
    const CbgmParams params{5, 3};
    const auto base = baseline_search(q.detections[0], refs);
    const auto res = cbgm_search(q, 0, refs, params);
    const auto top = top_k_results(base, params.k1);
    const auto context = context_set(q, 0, params.k2);
    REQUIRE(res.size() == 20);
    for (std::size_t i = 0; i < res.size(); ++i) {
      const bool selected = std::find(top.begin(), top.end(), i) != top.end();
      if (!selected) {
        CHECK(res[i] == base[i]);
        continue;
      }
      const WeightMatrix w = context_weights(q, context, gal[i]);
      const Matching bf = brute_force_matching(w);
      const auto q_edge = std::find_if(bf.edges.begin(), bf.edges.end(), [](const Edge& e) { return e.row == 0; });
      if (q_edge == bf.edges.end()) {
        CHECK(res[i] == base[i]);  // q on a padding column
        continue;
      }
      CHECK(res[i].matched->index == q_edge->col);
      CHECK(std::abs(res[i].similarity - bf.confidence) <= 1e-12);
      CHECK(res[i].similarity >= w(0, res[i].matched->index));
      CHECK(res[i].revised == (res[i].matched->index != base[i].matched->index));
    }
  }
}

TEST_CASE("small gallery image: q left unmatched falls back to baseline") {
  // Gallery person is much closer to the context person than to q.
  GalleryImage q{"q", {{BBox(0, 0, 1, 1), 0.5, 0.5, Embedding({1.0, 0.0}), std::nullopt},
                       {BBox(2, 0, 3, 1), 0.9, 0.5, Embedding({0.0, 1.0}), std::nullopt}}};
  GalleryImage g{"g", {{BBox(0, 0, 1, 1), 0.9, 0.5, Embedding({0.2, 1.0}), std::nullopt}}};
  const GalleryRefs refs{&g};
  const auto base = baseline_search(q.detections[0], refs);
  const auto res = cbgm_search(q, 0, refs, CbgmParams{10, 2});
  CHECK(res == base);
}

TEST_CASE("empty gallery images yield no-candidate results and are never re-ranked") {
  std::mt19937_64 rng(53);
  const GalleryImage q = oracle::random_image(rng, "q", 3, 4);
  std::vector<GalleryImage> gal{oracle::random_image(rng, "a", 3, 4), GalleryImage{"empty", {}},
                                oracle::random_image(rng, "b", 2, 4)};
  const auto res = cbgm_search(q, 0, refs_of(gal), CbgmParams{10, 3});
  REQUIRE(res.size() == 3);
  CHECK_FALSE(res[1].has_candidates());
  CHECK(res[1].image_id == "empty");
  CHECK(rank_results(res).size() == 2);
  CHECK(top_k_results(res, 10) == top_k_results(res, 2));
}

TEST_CASE("rank_results and rank_order agree and break ties by position") {
  std::vector<SearchResult> rs;
  const double sims[] = {0.3, 0.7, 0.3, 0.9, 0.7};
  for (int i = 0; i < 5; ++i) rs.push_back({"g" + std::to_string(i), MatchedPerson{0, BBox(0, 0, 1, 1)}, sims[i], false});
  const auto ranked = rank_results(rs);
  std::vector<std::string> ids;
  for (const auto& r : ranked) ids.push_back(r.image_id);
  CHECK(ids == std::vector<std::string>{"g3", "g1", "g4", "g0", "g2"});
  CHECK(top_k_results(rs, 3) == std::vector<std::size_t>{3, 1, 4});
  const Ranking order = rank_order(rs);
  CHECK(order.front().position == 3);
  CHECK(order.back().position == 2);
}

TEST_CASE("ranked rerank leaves a ranking equal to a fresh sort") {
  std::mt19937_64 rng(59);
  for (int t = 0; t < 30; ++t) {
    const GalleryImage q = oracle::random_image(rng, "q", 4, 6);
    std::vector<GalleryImage> gal;
    for (int i = 0; i < 40; ++i) gal.push_back(oracle::random_image(rng, "g" + std::to_string(i), 1 + i % 6, 6));
    const auto refs = refs_of(gal);
    auto results = baseline_search(q.detections[2], refs);
    Ranking ranking = rank_order(results);
    cbgm_rerank_ranked(q, 2, refs, results, ranking, CbgmParams{10, 3});
    CHECK(ranking == rank_order(results));
    CHECK(results == cbgm_search(q, 2, refs, CbgmParams{10, 3}));
  }
}
