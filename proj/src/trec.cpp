#include "fairqr/trec.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "fairqr/error.hpp"

namespace fairqr {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

const std::map<std::string, int, std::less<>> kNoJudgments;

}  // namespace

Qrels::Qrels(std::vector<QrelEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void Qrels::add(QrelEntry entry) {
  if (entry.grade < 0)
    throw Error(ErrorKind::input, "negative grade for " + entry.query_id + "/" + entry.doc_id);
  auto& judged = by_query_[entry.query_id];
  if (!judged.emplace(entry.doc_id, entry.grade).second)
    throw Error(ErrorKind::input,
                "duplicate judgment for " + entry.query_id + "/" + entry.doc_id);
  entries_.push_back(std::move(entry));
}

Qrels Qrels::read(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    strip_cr(line);
    auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw IngestError(n, "qrels line needs 4 fields");
    auto grade = parse_number<int>(f[3]);
    if (!grade) throw IngestError(n, "grade '" + std::string(f[3]) + "' is not an integer");
    try {
      qrels.add({std::string(f[0]), std::string(f[1]), std::string(f[2]), *grade});
    } catch (const Error& e) {
      throw IngestError(n, e.what());
    }
  }
  return qrels;
}

void Qrels::write(std::ostream& out) const {
  for (const auto& e : entries_)
    out << e.query_id << ' ' << e.iteration << ' ' << e.doc_id << ' ' << e.grade << '\n';
}

bool Qrels::contains(std::string_view query_id) const {
  return by_query_.find(query_id) != by_query_.end();
}

int Qrels::grade(std::string_view query_id, std::string_view doc_id) const {
  const auto& j = judgments(query_id);
  auto it = j.find(doc_id);
  return it == j.end() ? 0 : it->second;
}

const std::map<std::string, int, std::less<>>& Qrels::judgments(
    std::string_view query_id) const {
  auto it = by_query_.find(query_id);
  return it == by_query_.end() ? kNoJudgments : it->second;
}

std::vector<std::string> Qrels::query_ids() const {
  std::vector<std::string> ids;
  for (const auto& [q, _] : by_query_) ids.push_back(q);
  return ids;
}

const RankedList* Run::find(std::string_view query_id) const {
  for (const auto& q : queries)
    if (q.query_id == query_id) return &q;
  return nullptr;
}

std::string format_score(double score) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, score);
  return std::string(buf, ptr);
}

Run read_run(std::istream& in) {
  Run run;
  std::map<std::string, std::size_t, std::less<>> slot;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    strip_cr(line);
    auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 6) throw IngestError(n, "run line needs 6 fields");
    auto rank = parse_number<std::size_t>(f[3]);
    if (!rank || *rank == 0) throw IngestError(n, "rank '" + std::string(f[3]) + "' is not a positive integer");
    auto score = parse_number<double>(f[4]);
    if (!score) throw IngestError(n, "score '" + std::string(f[4]) + "' is not a number");
    if (run.tag.empty()) run.tag = std::string(f[5]);

    auto [it, inserted] = slot.emplace(std::string(f[0]), run.queries.size());
    if (inserted) run.queries.push_back({std::string(f[0]), {}});
    auto& list = run.queries[it->second];
    for (const auto& e : list.entries)
      if (e.doc_id == f[2])
        throw IngestError(n, "document '" + std::string(f[2]) + "' repeated for query " + list.query_id);
    list.entries.push_back({std::string(f[2]), *score, *rank});
  }
  for (auto& q : run.queries)
    std::stable_sort(q.entries.begin(), q.entries.end(),
                     [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return run;
}

void write_run(std::ostream& out, const Run& run) {
  const std::string tag = run.tag.empty() ? "fairqr" : run.tag;
  for (const auto& q : run.queries)
    for (const auto& e : q.entries)
      out << q.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' '
          << format_score(e.score) << ' ' << tag << '\n';
}

std::vector<QueryRecord> read_queries(std::istream& in) {
  std::vector<QueryRecord> queries;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw IngestError(n, "query line needs `id<TAB>text`");
    QueryRecord q{line.substr(0, tab), line.substr(tab + 1)};
    for (const auto& other : queries)
      if (other.id == q.id) throw IngestError(n, "duplicate query id " + q.id);
    queries.push_back(std::move(q));
  }
  return queries;
}

void write_queries(std::ostream& out, const std::vector<QueryRecord>& queries) {
  for (const auto& q : queries) out << q.id << '\t' << q.text << '\n';
}

}  // namespace fairqr
