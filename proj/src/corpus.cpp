#include "fairqr/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "fairqr/error.hpp"

namespace fairqr {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ingest: return "ingest";
    case ErrorKind::schema: return "schema";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::build: return "build";
    case ErrorKind::empty_query: return "empty-query";
    case ErrorKind::degenerate_exposure: return "degenerate-exposure";
    case ErrorKind::no_target: return "no-target";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::prompt_template: return "template";
    case ErrorKind::parse: return "parse";
    case ErrorKind::refiner: return "refiner";
    case ErrorKind::lexicon: return "lexicon";
    case ErrorKind::input: return "input";
    case ErrorKind::spec: return "spec";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

GroupSchema::GroupSchema(std::string category, std::vector<std::string> subgroups)
    : category_(std::move(category)), subgroups_(std::move(subgroups)) {
  if (category_.empty()) throw Error(ErrorKind::schema, "empty category name");
  std::set<std::string_view> seen;
  for (const auto& s : subgroups_) {
    if (s.empty())
      throw Error(ErrorKind::schema, "empty subgroup label in " + category_);
    if (!seen.insert(s).second)
      throw Error(ErrorKind::schema,
                  "duplicate subgroup '" + s + "' in " + category_);
  }
  if (!seen.contains(kUnknownSubgroup))
    subgroups_.emplace_back(kUnknownSubgroup);
  unknown_ = *index_of(kUnknownSubgroup);
}

std::optional<std::size_t> GroupSchema::index_of(std::string_view label) const {
  auto it = std::find(subgroups_.begin(), subgroups_.end(), label);
  if (it == subgroups_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - subgroups_.begin());
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    const bool alnum = (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') ||
                       (u >= 'A' && u <= 'Z');
    if (alnum) {
      current.push_back(static_cast<char>(u >= 'A' && u <= 'Z' ? u + 32 : u));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<GroupSchema> read_schemas(std::istream& in) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("schema file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("categories") || !j["categories"].is_array())
    throw Error(ErrorKind::schema, "schema file needs a \"categories\" array");

  std::vector<GroupSchema> schemas;
  std::set<std::string> names;
  for (const auto& c : j["categories"]) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string() ||
        !c.contains("subgroups") || !c["subgroups"].is_array())
      throw Error(ErrorKind::schema,
                  "each category needs \"name\" and \"subgroups\"");
    std::vector<std::string> subgroups;
    for (const auto& s : c["subgroups"]) {
      if (!s.is_string())
        throw Error(ErrorKind::schema, "subgroup labels must be strings");
      subgroups.push_back(s.get<std::string>());
    }
    auto name = c["name"].get<std::string>();
    if (!names.insert(name).second)
      throw Error(ErrorKind::schema, "duplicate category " + name);
    schemas.emplace_back(std::move(name), std::move(subgroups));
  }
  return schemas;
}

void write_schemas(std::ostream& out, const std::vector<GroupSchema>& schemas) {
  ordered_json j;
  j["categories"] = ordered_json::array();
  for (const auto& s : schemas) {
    ordered_json c;
    c["name"] = s.category();
    c["subgroups"] = s.subgroups();
    j["categories"].push_back(std::move(c));
  }
  out << j.dump(2) << '\n';
}

Document parse_document(std::string_view json_line, std::size_t line_number) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_line);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(line_number, e.what());
  }
  if (!j.is_object()) throw IngestError(line_number, "record is not an object");
  if (!j.contains("id") || !j["id"].is_string())
    throw IngestError(line_number, "missing string field \"id\"");
  if (!j.contains("text") || !j["text"].is_string())
    throw IngestError(line_number, "missing string field \"text\"");

  Document doc;
  doc.id = j["id"].get<std::string>();
  doc.text = j["text"].get<std::string>();
  if (doc.id.empty()) throw IngestError(line_number, "empty id");
  if (j.contains("groups")) {
    const auto& g = j["groups"];
    if (!g.is_object())
      throw IngestError(line_number, "\"groups\" must be an object");
    for (const auto& [category, labels] : g.items()) {
      if (!labels.is_array())
        throw IngestError(line_number, "groups." + category + " must be an array");
      std::vector<std::string> values;
      for (const auto& l : labels) {
        if (!l.is_string())
          throw IngestError(line_number, "groups." + category + " holds a non-string");
        values.push_back(l.get<std::string>());
      }
      doc.groups.emplace_back(category, std::move(values));
    }
  }
  return doc;
}

std::string to_jsonl(const Document& doc) {
  ordered_json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["groups"] = ordered_json::object();
  for (const auto& [category, labels] : doc.groups) j["groups"][category] = labels;
  return j.dump();
}

CorpusStore CorpusStore::ingest(std::istream& records,
                                std::vector<GroupSchema> schemas) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_number = 0;
  std::map<std::string, std::size_t, std::less<>> first_seen;
  while (std::getline(records, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto doc = parse_document(line, line_number);
    auto [it, inserted] = first_seen.emplace(doc.id, line_number);
    if (!inserted)
      throw Error(ErrorKind::conflict,
                  "line " + std::to_string(line_number) + ": duplicate id '" +
                      doc.id + "' (first on line " + std::to_string(it->second) + ")");
    docs.push_back(std::move(doc));
  }
  return from_documents(std::move(docs), std::move(schemas));
}

CorpusStore CorpusStore::from_documents(std::vector<Document> documents,
                                        std::vector<GroupSchema> schemas) {
  CorpusStore store;
  store.schemas_ = std::move(schemas);
  store.documents_ = std::move(documents);
  store.memberships_.assign(store.schemas_.size(), {});
  for (auto& m : store.memberships_) m.resize(store.documents_.size());

  for (std::size_t d = 0; d < store.documents_.size(); ++d) {
    const auto& doc = store.documents_[d];
    if (!store.by_id_.emplace(doc.id, d).second)
      throw Error(ErrorKind::conflict, "duplicate id '" + doc.id + "'");

    std::set<std::string_view> categories;
    for (const auto& [category, labels] : doc.groups) {
      if (!categories.insert(category).second)
        throw Error(ErrorKind::schema,
                    "document '" + doc.id + "' repeats category " + category);
      const std::size_t s = store.schema_index(category);
      const auto& schema = store.schemas_[s];
      auto& members = store.memberships_[s][d];
      for (const auto& label : labels) {
        auto idx = schema.index_of(label);
        if (!idx)
          throw Error(ErrorKind::schema, "document '" + doc.id + "': subgroup '" +
                                             label + "' not in category " + category);
        const auto u = static_cast<std::uint32_t>(*idx);
        if (std::find(members.begin(), members.end(), u) != members.end())
          throw Error(ErrorKind::schema, "document '" + doc.id +
                                             "' repeats subgroup '" + label + "'");
        members.push_back(u);
      }
    }
    for (std::size_t s = 0; s < store.schemas_.size(); ++s) {
      if (store.memberships_[s][d].empty())
        store.memberships_[s][d].push_back(
            static_cast<std::uint32_t>(store.schemas_[s].unknown_index()));
    }

    auto tokens = tokenize(doc.text);
    store.total_tokens_ += tokens.size();
    store.tokens_.push_back(std::move(tokens));
  }
  return store;
}

std::size_t CorpusStore::schema_index(std::string_view category) const {
  for (std::size_t s = 0; s < schemas_.size(); ++s)
    if (schemas_[s].category() == category) return s;
  throw Error(ErrorKind::schema, "category '" + std::string(category) +
                                     "' not in schema");
}

const GroupSchema& CorpusStore::schema(std::string_view category) const {
  for (const auto& s : schemas_)
    if (s.category() == category) return s;
  throw Error(ErrorKind::lookup, "unknown category '" + std::string(category) + "'");
}

std::optional<std::size_t> CorpusStore::find(std::string_view id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const Document& CorpusStore::document(std::string_view id) const {
  auto idx = find(id);
  if (!idx) throw Error(ErrorKind::lookup, "unknown document '" + std::string(id) + "'");
  return documents_[*idx];
}

std::vector<std::string> CorpusStore::labels(std::string_view doc_id,
                                             std::string_view category) const {
  auto idx = find(doc_id);
  if (!idx) throw Error(ErrorKind::lookup, "unknown document '" + std::string(doc_id) + "'");
  const auto& s = schema(category);
  std::vector<std::string> out;
  for (auto m : memberships_[schema_index(category)][*idx]) out.push_back(s.label(m));
  return out;
}

std::vector<double> CorpusStore::group_vector(std::size_t index,
                                              const GroupSchema& schema) const {
  const auto& members = memberships_[schema_index(schema.category())].at(index);
  std::vector<double> v(schema.size(), 0.0);
  const double share = 1.0 / static_cast<double>(members.size());
  for (auto m : members) v[m] = share;
  return v;
}

std::vector<double> CorpusStore::group_vector(std::string_view doc_id,
                                              std::string_view category) const {
  auto idx = find(doc_id);
  if (!idx) throw Error(ErrorKind::lookup, "unknown document '" + std::string(doc_id) + "'");
  return group_vector(*idx, schema(category));
}

std::vector<double> CorpusStore::group_vector_or_unknown(
    std::string_view doc_id, const GroupSchema& schema) const {
  if (auto idx = find(doc_id)) return group_vector(*idx, schema);
  std::vector<double> v(schema.size(), 0.0);
  v[schema.unknown_index()] = 1.0;
  return v;
}

void CorpusStore::write_jsonl(std::ostream& out) const {
  for (const auto& d : documents_) out << to_jsonl(d) << '\n';
}

}  // namespace fairqr
