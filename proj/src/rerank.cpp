#include "fairqr/rerank.hpp"

#include <algorithm>
#include <set>

#include "fairqr/error.hpp"

namespace fairqr {
namespace {

std::vector<std::string> token_set(const std::vector<std::string>& tokens) {
  std::vector<std::string> s(tokens);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

RankedList semantic_rerank(std::span<const std::string> doc_set,
                           std::string_view original_query, const InvertedIndex& index,
                           std::string query_id) {
  const auto tokens = tokenize(original_query);
  std::set<std::string_view> seen;
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(doc_set.size());
  for (const auto& id : doc_set) {
    if (!seen.insert(id).second)
      throw Error(ErrorKind::input, "document '" + id + "' appears twice in the re-rank set");
    scored.emplace_back(id, index.bm25_score(tokens, id));
  }
  return make_ranked_list(std::move(query_id), std::move(scored));
}

RankedList semantic_rerank(const RankedList& doc_set, std::string_view original_query,
                           const InvertedIndex& index) {
  const auto ids = doc_set.doc_ids();
  return semantic_rerank(ids, original_query, index, doc_set.query_id);
}

double doc_similarity(const CorpusStore& store, std::string_view a, std::string_view b) {
  auto ia = store.find(a);
  auto ib = store.find(b);
  if (!ia) throw Error(ErrorKind::lookup, "unknown document '" + std::string(a) + "'");
  if (!ib) throw Error(ErrorKind::lookup, "unknown document '" + std::string(b) + "'");
  return jaccard(token_set(store.tokens(*ia)), token_set(store.tokens(*ib)));
}

RankedList mmr_rerank(const RankedList& candidates, std::string_view original_query,
                      const CorpusStore& store, const InvertedIndex& index,
                      double lambda, std::size_t k) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw Error(ErrorKind::input, "lambda must lie in [0, 1]");
  if (k < 1) throw Error(ErrorKind::input, "k must be at least 1");
  RankedList out{candidates.query_id, {}};
  if (candidates.empty()) return out;

  const auto query_tokens = tokenize(original_query);
  const std::size_t n = candidates.size();
  std::vector<std::string> ids = candidates.doc_ids();
  std::vector<double> rel(n);
  std::vector<std::vector<std::string>> sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    rel[i] = index.bm25_score(query_tokens, ids[i]);
    auto pos = store.find(ids[i]);
    if (!pos) throw Error(ErrorKind::lookup, "unknown document '" + ids[i] + "'");
    sets[i] = token_set(store.tokens(*pos));
  }
  const auto [lo, hi] = std::minmax_element(rel.begin(), rel.end());
  const double min_rel = *lo;
  const double span = *hi - *lo;
  for (auto& r : rel) r = span > 0.0 ? (r - min_rel) / span : 1.0;

  // max similarity of each candidate to the selected set
  std::vector<double> redundancy(n, 0.0);
  std::vector<bool> taken(n, false);
  const std::size_t picks = std::min(k, n);
  for (std::size_t step = 0; step < picks; ++step) {
    std::size_t best = n;
    double best_value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      // First pick is the most relevant document regardless of lambda.
      const double value = step == 0 ? rel[i] : lambda * rel[i] - (1.0 - lambda) * redundancy[i];
      if (best == n || value > best_value || (value == best_value && ids[i] < ids[best])) {
        best = i;
        best_value = value;
      }
    }
    taken[best] = true;
    const double score = step == 0 ? lambda * rel[best] : best_value;
    out.entries.push_back({ids[best], score, step + 1});
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i]) redundancy[i] = std::max(redundancy[i], jaccard(sets[i], sets[best]));
  }
  return out;
}

}  // namespace fairqr
