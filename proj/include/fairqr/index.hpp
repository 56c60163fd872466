#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairqr/corpus.hpp"

namespace fairqr {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  bool operator==(const Bm25Params&) const = default;
};

struct Posting {
  std::uint32_t doc;  // corpus position
  std::uint32_t tf;

  bool operator==(const Posting&) const = default;
};

struct RankedEntry {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RankedEntry&) const = default;
};

/// Ordered result list for one query.
struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
  std::vector<std::string> doc_ids() const;

  /// Scores non-increasing, ids unique, ranks 1..n.
  bool well_formed() const;

  bool operator==(const RankedList&) const = default;
};

/// Builds a RankedList from (doc_id, score) pairs: score descending, then
/// doc_id ascending; ranks assigned from 1.
RankedList make_ranked_list(std::string query_id,
                            std::vector<std::pair<std::string, double>> scored);

/// Term-frequency inverted index with Okapi BM25 scoring. Immutable after
/// build, so concurrent retrieval is safe.
class InvertedIndex {
 public:
  static InvertedIndex build(const CorpusStore& store, Bm25Params params = {});

  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  const Bm25Params& params() const noexcept { return params_; }
  std::size_t vocabulary_size() const noexcept { return postings_.size(); }

  std::span<const Posting> postings(std::string_view term) const;
  std::size_t doc_frequency(std::string_view term) const {
    return postings(term).size();
  }
  const std::string& doc_id(std::size_t pos) const { return doc_ids_.at(pos); }
  std::size_t doc_length(std::size_t pos) const { return doc_lengths_.at(pos); }
  std::optional<std::size_t> find_doc(std::string_view id) const;

  /// ln(1 + (N - df + 0.5) / (df + 0.5)); 0 for unseen terms.
  double idf(std::string_view term) const;

  /// Sum over distinct query terms of idf * tf(k1+1) / (tf + k1(1-b+b*dl/avgdl)).
  double bm25_score(std::span<const std::string> query_tokens,
                    std::string_view doc_id) const;

  /// Top `pool_size` documents with positive score. Throws empty_query when
  /// the query has no tokens.
  RankedList retrieve(std::string_view query, std::size_t pool_size,
                      std::string query_id = {}) const;

  /// Versioned JSON persistence.
  void save(std::ostream& out) const;
  static InvertedIndex load(std::istream& in);

  bool operator==(const InvertedIndex&) const = default;

 private:
  InvertedIndex() = default;
  double term_weight(double idf, std::uint32_t tf, std::size_t dl) const;

  Bm25Params params_;
  double avgdl_ = 0.0;
  std::vector<std::string> doc_ids_;
  std::vector<std::size_t> doc_lengths_;
  std::map<std::string, std::vector<Posting>, std::less<>> postings_;
  std::map<std::string, std::size_t, std::less<>> doc_by_id_;
};

}  // namespace fairqr
