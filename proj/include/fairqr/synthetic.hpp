#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairqr/corpus.hpp"
#include "fairqr/refine.hpp"
#include "fairqr/trec.hpp"

namespace fairqr {

struct SubgroupSpec {
  std::string label;
  double proportion = 0.0;
  std::vector<std::string> markers;  // first one appears in every member document
};

struct MentionRange {
  std::size_t min = 0;
  std::size_t max = 0;
};

/// Parameters of a seeded corpus with controlled group skew. Every topic puts
/// `skew` of its documents in the majority subgroup (largest proportion); the
/// rest are split over the other subgroups by proportion. Minority documents
/// mention their topic less often, so plain BM25 over-exposes the majority.
struct SkewSpec {
  std::uint64_t seed = 20250101;
  std::size_t doc_count = 200;
  std::size_t topic_count = 10;
  std::string category = "gender";
  std::vector<SubgroupSpec> subgroups;
  double skew = 0.8;

  std::size_t topic_vocabulary = 4;
  std::size_t query_terms = 3;
  std::size_t filler_vocabulary = 400;
  MentionRange majority_topic_mentions{5, 9};
  MentionRange minority_topic_mentions{2, 3};
  MentionRange marker_mentions{1, 2};
  MentionRange doc_length{40, 60};
  /// Share of majority documents that also mention another topic's query terms.
  double distractor_rate = 0.4;
  MentionRange distractor_mentions{2, 3};

  /// Two subgroups (male, female) with proportions 0.8/0.2.
  static SkewSpec gender_default();

  /// Throws ErrorKind::spec on infeasible parameters.
  void validate() const;
};

struct SyntheticData {
  std::vector<Document> documents;
  std::vector<GroupSchema> schemas;
  std::vector<QueryRecord> queries;
  std::vector<std::size_t> doc_topics;  // topic of each document
  Qrels qrels;
  Lexicon lexicon;
};

SyntheticData generate(const SkewSpec& spec);

/// corpus.jsonl, schema.json, queries.tsv, qrels.txt, lexicon.json.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace fairqr
