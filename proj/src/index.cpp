#include "fairqr/index.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "fairqr/error.hpp"

namespace fairqr {
namespace {

constexpr const char* kIndexFormat = "fairqr-index";
constexpr int kIndexVersion = 1;

std::vector<std::string> distinct_in_order(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& t : tokens)
    if (seen.insert(t).second) out.push_back(t);
  return out;
}

}  // namespace

std::vector<std::string> RankedList::doc_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.doc_id);
  return ids;
}

bool RankedList::well_formed() const {
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].rank != i + 1) return false;
    if (!seen.insert(entries[i].doc_id).second) return false;
    if (i > 0 && entries[i].score > entries[i - 1].score) return false;
  }
  return true;
}

RankedList make_ranked_list(std::string query_id,
                            std::vector<std::pair<std::string, double>> scored) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  RankedList list{std::move(query_id), {}};
  list.entries.reserve(scored.size());
  for (auto& [id, score] : scored)
    list.entries.push_back({std::move(id), score, list.entries.size() + 1});
  return list;
}

InvertedIndex InvertedIndex::build(const CorpusStore& store, Bm25Params params) {
  if (store.size() == 0) throw Error(ErrorKind::build, "cannot index an empty corpus");
  if (!(params.k1 > 0.0)) throw Error(ErrorKind::build, "k1 must be positive");
  if (!(params.b >= 0.0 && params.b <= 1.0))
    throw Error(ErrorKind::build, "b must lie in [0, 1]");

  InvertedIndex index;
  index.params_ = params;
  std::size_t total = 0;
  for (std::size_t d = 0; d < store.size(); ++d) {
    const auto& tokens = store.tokens(d);
    index.doc_ids_.push_back(store.document(d).id);
    index.doc_lengths_.push_back(tokens.size());
    index.doc_by_id_.emplace(store.document(d).id, d);
    total += tokens.size();

    std::map<std::string_view, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    // Documents are visited in corpus order, so every list stays sorted by doc.
    for (const auto& [term, count] : tf) {
      auto it = index.postings_.find(term);
      if (it == index.postings_.end())
        it = index.postings_.emplace(std::string(term), std::vector<Posting>{}).first;
      it->second.push_back({static_cast<std::uint32_t>(d), count});
    }
  }
  index.avgdl_ = static_cast<double>(total) / static_cast<double>(store.size());
  return index;
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return {};
  return it->second;
}

std::optional<std::size_t> InvertedIndex::find_doc(std::string_view id) const {
  auto it = doc_by_id_.find(id);
  if (it == doc_by_id_.end()) return std::nullopt;
  return it->second;
}

double InvertedIndex::idf(std::string_view term) const {
  const auto df = static_cast<double>(doc_frequency(term));
  if (df == 0.0) return 0.0;
  const auto n = static_cast<double>(doc_count());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double InvertedIndex::term_weight(double idf, std::uint32_t tf,
                                  std::size_t dl) const {
  const double f = tf;
  // avgdl is 0 only when every document is empty, in which case no term matches.
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(dl) / avgdl_;
  return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double InvertedIndex::bm25_score(std::span<const std::string> query_tokens,
                                 std::string_view doc_id) const {
  auto pos = find_doc(doc_id);
  if (!pos) throw Error(ErrorKind::lookup, "unknown document '" + std::string(doc_id) + "'");
  const auto doc = static_cast<std::uint32_t>(*pos);
  double score = 0.0;
  for (const auto& term : distinct_in_order(query_tokens)) {
    auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == list.end() || it->doc != doc) continue;
    score += term_weight(idf(term), it->tf, doc_lengths_[doc]);
  }
  return score;
}

RankedList InvertedIndex::retrieve(std::string_view query, std::size_t pool_size,
                                   std::string query_id) const {
  if (pool_size == 0) throw Error(ErrorKind::input, "pool_size must be at least 1");
  const auto tokens = tokenize(query);
  if (tokens.empty())
    throw Error(ErrorKind::empty_query, "query '" + std::string(query) + "' has no tokens");

  // Term-at-a-time accumulation in the same term order as bm25_score, so the
  // two paths produce identical sums.
  std::vector<double> scores(doc_count(), 0.0);
  std::vector<std::uint32_t> touched;
  for (const auto& term : distinct_in_order(tokens)) {
    const double w = idf(term);
    for (const auto& p : postings(term)) {
      if (scores[p.doc] == 0.0) touched.push_back(p.doc);
      scores[p.doc] += term_weight(w, p.tf, doc_lengths_[p.doc]);
    }
  }

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(touched.size());
  for (auto d : touched)
    if (scores[d] > 0.0) scored.emplace_back(doc_ids_[d], scores[d]);
  auto list = make_ranked_list(std::move(query_id), std::move(scored));
  if (list.entries.size() > pool_size) list.entries.resize(pool_size);
  return list;
}

void InvertedIndex::save(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["format"] = kIndexFormat;
  j["version"] = kIndexVersion;
  j["k1"] = params_.k1;
  j["b"] = params_.b;
  j["avgdl"] = avgdl_;
  j["documents"] = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < doc_ids_.size(); ++d)
    j["documents"].push_back({doc_ids_[d], doc_lengths_[d]});
  auto& terms = j["postings"] = nlohmann::ordered_json::object();
  for (const auto& [term, list] : postings_) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : list) arr.push_back({p.doc, p.tf});
    terms[term] = std::move(arr);
  }
  out << j.dump() << '\n';
}

InvertedIndex InvertedIndex::load(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, std::string("index file: ") + e.what());
  }
  if (j.value("format", "") != kIndexFormat)
    throw Error(ErrorKind::io, "not a fairqr index file");
  if (j.value("version", 0) != kIndexVersion)
    throw Error(ErrorKind::io, "unsupported index version " + j.value("version", nlohmann::json()).dump());

  InvertedIndex index;
  try {
    index.params_ = {j.at("k1").get<double>(), j.at("b").get<double>()};
    index.avgdl_ = j.at("avgdl").get<double>();
    for (const auto& d : j.at("documents")) {
      index.doc_by_id_.emplace(d.at(0).get<std::string>(), index.doc_ids_.size());
      index.doc_ids_.push_back(d.at(0).get<std::string>());
      index.doc_lengths_.push_back(d.at(1).get<std::size_t>());
    }
    for (const auto& [term, list] : j.at("postings").items()) {
      std::vector<Posting> postings;
      for (const auto& p : list) {
        const auto doc = p.at(0).get<std::uint32_t>();
        if (doc >= index.doc_ids_.size())
          throw Error(ErrorKind::io, "posting for '" + term + "' points past the document table");
        postings.push_back({doc, p.at(1).get<std::uint32_t>()});
      }
      index.postings_.emplace(term, std::move(postings));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, std::string("index file: ") + e.what());
  }
  return index;
}

}  // namespace fairqr
