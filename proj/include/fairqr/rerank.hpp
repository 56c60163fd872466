#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "fairqr/corpus.hpp"
#include "fairqr/index.hpp"

namespace fairqr {

/// Orders `doc_set` by BM25 score against `original_query` (ties by doc id).
/// Empty input gives an empty list.
RankedList semantic_rerank(std::span<const std::string> doc_set,
                           std::string_view original_query, const InvertedIndex& index,
                           std::string query_id = {});
RankedList semantic_rerank(const RankedList& doc_set, std::string_view original_query,
                           const InvertedIndex& index);

/// Jaccard similarity of the two documents' token sets.
double doc_similarity(const CorpusStore& store, std::string_view a, std::string_view b);

inline constexpr double kDefaultMmrLambda = 0.5;

/// Greedy maximal marginal relevance over `candidates`. Relevance is the
/// original-query BM25 score min-max normalized over the pool; redundancy is
/// the maximum doc_similarity to anything already picked. The output score of
/// each entry is its marginal value at the time it was picked.
RankedList mmr_rerank(const RankedList& candidates, std::string_view original_query,
                      const CorpusStore& store, const InvertedIndex& index,
                      double lambda, std::size_t k);

}  // namespace fairqr
