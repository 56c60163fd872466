#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fairqr {

inline constexpr std::string_view kUnknownSubgroup = "Unknown";

/// Ordered subgroups of one fairness category. Distributions over the
/// category are vectors in this order. "Unknown" is always present once; it
/// is appended when the caller's list omits it.
class GroupSchema {
 public:
  GroupSchema(std::string category, std::vector<std::string> subgroups);

  const std::string& category() const noexcept { return category_; }
  const std::vector<std::string>& subgroups() const noexcept {
    return subgroups_;
  }
  std::size_t size() const noexcept { return subgroups_.size(); }
  const std::string& label(std::size_t i) const { return subgroups_.at(i); }
  std::optional<std::size_t> index_of(std::string_view label) const;
  std::size_t unknown_index() const noexcept { return unknown_; }

  bool operator==(const GroupSchema&) const = default;

 private:
  std::string category_;
  std::vector<std::string> subgroups_;
  std::size_t unknown_ = 0;
};

/// Category -> labels, kept in record order so serialization round-trips.
using GroupLabels = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct Document {
  std::string id;
  std::string text;
  GroupLabels groups;

  bool operator==(const Document&) const = default;
};

/// Lowercases ASCII and splits on every non-alphanumeric byte.
std::vector<std::string> tokenize(std::string_view text);

/// Schema file: {"categories": [{"name": "...", "subgroups": [...]}, ...]}.
std::vector<GroupSchema> read_schemas(std::istream& in);
void write_schemas(std::ostream& out, const std::vector<GroupSchema>& schemas);

Document parse_document(std::string_view json_line, std::size_t line_number);
std::string to_jsonl(const Document& doc);

/// Immutable, group-annotated document collection.
class CorpusStore {
 public:
  /// Reads JSONL records. Blank lines are skipped.
  static CorpusStore ingest(std::istream& records,
                            std::vector<GroupSchema> schemas);
  static CorpusStore from_documents(std::vector<Document> documents,
                                    std::vector<GroupSchema> schemas);

  std::size_t size() const noexcept { return documents_.size(); }
  std::size_t total_tokens() const noexcept { return total_tokens_; }

  const Document& document(std::size_t index) const {
    return documents_.at(index);
  }
  const Document& document(std::string_view id) const;
  std::optional<std::size_t> find(std::string_view id) const;
  const std::vector<Document>& documents() const noexcept { return documents_; }

  const std::vector<std::string>& tokens(std::size_t index) const {
    return tokens_.at(index);
  }

  const std::vector<GroupSchema>& schemas() const noexcept { return schemas_; }
  const GroupSchema& schema(std::string_view category) const;

  /// Labels of `doc` in `category`; {"Unknown"} when the record has none.
  std::vector<std::string> labels(std::string_view doc_id,
                                  std::string_view category) const;

  /// Unit mass split equally over the document's labeled subgroups.
  std::vector<double> group_vector(std::string_view doc_id,
                                   std::string_view category) const;
  std::vector<double> group_vector(std::size_t index,
                                   const GroupSchema& schema) const;

  /// Same as group_vector, but ids outside the corpus get all mass on Unknown.
  std::vector<double> group_vector_or_unknown(std::string_view doc_id,
                                              const GroupSchema& schema) const;

  void write_jsonl(std::ostream& out) const;

 private:
  CorpusStore() = default;
  std::size_t schema_index(std::string_view category) const;

  std::vector<Document> documents_;
  std::vector<std::vector<std::string>> tokens_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<GroupSchema> schemas_;
  // [schema][document] -> subgroup indices
  std::vector<std::vector<std::vector<std::uint32_t>>> memberships_;
  std::size_t total_tokens_ = 0;
};

}  // namespace fairqr
