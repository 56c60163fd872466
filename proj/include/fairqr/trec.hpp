#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairqr/index.hpp"

namespace fairqr {

struct QrelEntry {
  std::string query_id;
  std::string iteration;  // second column, usually "0"
  std::string doc_id;
  int grade = 0;

  bool operator==(const QrelEntry&) const = default;
};

/// Graded relevance judgments. Entries keep file order for bit-exact writing.
class Qrels {
 public:
  Qrels() = default;
  explicit Qrels(std::vector<QrelEntry> entries);

  /// TREC qrels: `query_id iteration doc_id grade`, whitespace separated.
  static Qrels read(std::istream& in);
  void write(std::ostream& out) const;

  void add(QrelEntry entry);
  const std::vector<QrelEntry>& entries() const noexcept { return entries_; }

  bool contains(std::string_view query_id) const;
  /// 0 for unjudged pairs.
  int grade(std::string_view query_id, std::string_view doc_id) const;
  /// doc -> grade for one query; empty when the query is absent.
  const std::map<std::string, int, std::less<>>& judgments(std::string_view query_id) const;
  std::vector<std::string> query_ids() const;

 private:
  std::vector<QrelEntry> entries_;
  std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>> by_query_;
};

/// A TREC run: one ranked list per query, in file order.
struct Run {
  std::string tag;
  std::vector<RankedList> queries;

  const RankedList* find(std::string_view query_id) const;
};

/// `query_id Q0 doc_id rank score tag`. Lines for a query are ordered by rank.
Run read_run(std::istream& in);
void write_run(std::ostream& out, const Run& run);

/// Shortest decimal form that parses back to the same double.
std::string format_score(double score);

struct QueryRecord {
  std::string id;
  std::string text;

  bool operator==(const QueryRecord&) const = default;
};

/// Query file: `query_id<TAB>text` per line.
std::vector<QueryRecord> read_queries(std::istream& in);
void write_queries(std::ostream& out, const std::vector<QueryRecord>& queries);

}  // namespace fairqr
