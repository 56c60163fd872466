#include <doctest.h>

#include <algorithm>
#include <set>

#include "fairqr/error.hpp"
#include "fairqr/rerank.hpp"
#include "fixtures.hpp"

using namespace fairqr;

namespace {

struct Fixture {
  CorpusStore store = fixtures::store({
      fixtures::doc("d1", "solar power plant", {"male"}),
      fixtures::doc("d2", "solar solar power", {"female"}),
      fixtures::doc("d3", "wind power farm"),
      fixtures::doc("d4", "solar panel roof solar power cost"),
      fixtures::doc("d5", "power grid storage"),
      fixtures::doc("d6", "solar power plant"),
      fixtures::doc("d7", "ocean tide"),
  });
  InvertedIndex index = InvertedIndex::build(store);
};

// Independent greedy MMR written straight from the definition.
std::vector<std::string> brute_mmr(const Fixture& f, const std::vector<std::string>& ids,
                                   const std::string& query, double lambda, std::size_t k) {
  const auto q = tokenize(query);
  std::vector<double> rel;
  for (const auto& id : ids) rel.push_back(f.index.bm25_score(q, id));
  const double lo = *std::min_element(rel.begin(), rel.end());
  const double hi = *std::max_element(rel.begin(), rel.end());
  for (auto& r : rel) r = hi > lo ? (r - lo) / (hi - lo) : 1.0;
  std::vector<std::string> picked;
  std::vector<bool> used(ids.size(), false);
  while (picked.size() < std::min(k, ids.size())) {
    std::size_t best = ids.size();
    double best_v = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (used[i]) continue;
      double red = 0;
      for (const auto& p : picked) red = std::max(red, doc_similarity(f.store, ids[i], p));
      const double v = picked.empty() ? rel[i] : lambda * rel[i] - (1 - lambda) * red;
      if (best == ids.size() || v > best_v || (v == best_v && ids[i] < ids[best])) {
        best = i;
        best_v = v;
      }
    }
    used[best] = true;
    picked.push_back(ids[best]);
  }
  return picked;
}

}  // namespace

TEST_CASE("semantic_rerank edge cases") {
  Fixture f;
  CHECK(semantic_rerank(std::vector<std::string>{}, "solar", f.index).empty());
  auto one = semantic_rerank(std::vector<std::string>{"d3"}, "solar", f.index, "q");
  CHECK(one.doc_ids() == std::vector<std::string>{"d3"});
  CHECK(one.entries[0].rank == 1);
  CHECK(semantic_rerank(std::vector<std::string>{"d1", "d2"}, "solar", f.index).doc_ids() ==
        std::vector<std::string>{"d2", "d1"});
  CHECK_THROWS_AS(semantic_rerank(std::vector<std::string>{"d1", "d1"}, "solar", f.index), Error);
}

TEST_CASE("semantic_rerank of five documents matches brute-force scoring") {
  Fixture f;
  const std::vector<std::string> set{"d5", "d4", "d3", "d2", "d1"};
  const auto q = tokenize("solar power plant");
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& id : set) scored.emplace_back(id, f.index.bm25_score(q, id));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  auto out = semantic_rerank(set, "solar power plant", f.index, "q");
  REQUIRE(out.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(out.entries[i].doc_id == scored[i].first);
    CHECK(out.entries[i].score == scored[i].second);
  }
  CHECK(out.well_formed());
  // Documents outside the retrieval set still get their place (score 0).
  auto with_miss = semantic_rerank(std::vector<std::string>{"d7", "d1"}, "solar", f.index);
  CHECK(with_miss.doc_ids() == std::vector<std::string>{"d1", "d7"});
}

TEST_CASE("Jaccard similarity") {
  auto s = fixtures::store({fixtures::doc("a", "a b c"), fixtures::doc("b", "b c d"), fixtures::doc("c", "x y"),
                            fixtures::doc("d", "c b a a"), fixtures::doc("e", "")});
  CHECK(doc_similarity(s, "a", "b") == doctest::Approx(0.5));
  CHECK(doc_similarity(s, "a", "c") == 0.0);
  CHECK(doc_similarity(s, "a", "d") == 1.0);
  CHECK(doc_similarity(s, "a", "a") == 1.0);
  CHECK(doc_similarity(s, "e", "e") == 1.0);
  CHECK_THROWS_AS(doc_similarity(s, "a", "nope"), Error);
}

TEST_CASE("MMR with lambda 1 is the relevance order") {
  Fixture f;
  auto pool = f.index.retrieve("solar power", 10, "q");
  for (std::size_t k : {1u, 3u, 10u}) {
    auto mmr = mmr_rerank(pool, "solar power", f.store, f.index, 1.0, k);
    auto ids = pool.doc_ids();
    ids.resize(std::min(k, ids.size()));
    CHECK(mmr.doc_ids() == ids);
  }
}

TEST_CASE("MMR with lambda 0 avoids duplicates") {
  auto store = fixtures::store({fixtures::doc("a", "sun sun moon"), fixtures::doc("b", "sun sun moon"),
                                fixtures::doc("c", "sun tide")});
  auto index = InvertedIndex::build(store);
  auto pool = index.retrieve("sun", 10, "q");
  REQUIRE(pool.doc_ids().front() == "a");
  auto mmr = mmr_rerank(pool, "sun", store, index, 0.0, 3);
  CHECK(mmr.doc_ids() == std::vector<std::string>{"a", "c", "b"});
}

TEST_CASE("MMR matches an exhaustive greedy simulation") {
  Fixture f;
  const std::vector<std::string> four{"d1", "d2", "d4", "d6"};
  auto pool = semantic_rerank(four, "solar power plant", f.index, "q");
  auto mmr = mmr_rerank(pool, "solar power plant", f.store, f.index, 0.5, 4);
  CHECK(mmr.doc_ids() == brute_mmr(f, pool.doc_ids(), "solar power plant", 0.5, 4));

  fixtures::Lcg rng(3);
  const std::vector<std::string> all{"d1", "d2", "d3", "d4", "d5", "d6", "d7"};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> subset;
    for (const auto& id : all)
      if (rng.below(2)) subset.push_back(id);
    if (subset.empty()) continue;
    const double lambda = static_cast<double>(rng.below(11)) / 10.0;
    const std::size_t k = 1 + rng.below(7);
    auto p = semantic_rerank(subset, "solar power", f.index, "q");
    auto got = mmr_rerank(p, "solar power", f.store, f.index, lambda, k);
    REQUIRE(got.doc_ids() == brute_mmr(f, p.doc_ids(), "solar power", lambda, k));
    const auto got_ids = got.doc_ids();
    std::set<std::string> uniq(got_ids.begin(), got_ids.end());
    REQUIRE(uniq.size() == got.size());
  }
}

TEST_CASE("MMR input checks") {
  Fixture f;
  auto pool = f.index.retrieve("solar", 10);
  CHECK(mmr_rerank(RankedList{}, "solar", f.store, f.index, 0.5, 5).empty());
  CHECK_THROWS_AS(mmr_rerank(pool, "solar", f.store, f.index, 1.5, 5), Error);
  CHECK_THROWS_AS(mmr_rerank(pool, "solar", f.store, f.index, 0.5, 0), Error);
}
