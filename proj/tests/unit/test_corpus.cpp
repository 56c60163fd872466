#include <doctest.h>

#include <sstream>

#include "fairqr/error.hpp"
#include "fixtures.hpp"

using namespace fairqr;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Information Retrieval!") == std::vector<std::string>{"information", "retrieval"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("BM25-based search") == std::vector<std::string>{"bm25", "based", "search"});
  CHECK(tokenize("  --  ").empty());
}

TEST_CASE("schema appends Unknown once and rejects bad labels") {
  GroupSchema s("gender", {"male", "female"});
  CHECK(s.subgroups() == std::vector<std::string>{"male", "female", "Unknown"});
  CHECK(s.unknown_index() == 2);
  CHECK(s.index_of("female") == 1);
  CHECK_FALSE(s.index_of("martian"));

  GroupSchema explicit_unknown("gender", {"Unknown", "male"});
  CHECK(explicit_unknown.size() == 2);
  CHECK(explicit_unknown.unknown_index() == 0);

  CHECK(kind_of([] { GroupSchema("g", {"a", "a"}); }) == ErrorKind::schema);
  CHECK(kind_of([] { GroupSchema("g", {""}); }) == ErrorKind::schema);
  CHECK(kind_of([] { GroupSchema("", {"a"}); }) == ErrorKind::schema);
}

TEST_CASE("schema file round-trips") {
  std::vector<GroupSchema> schemas{{"gender", {"male", "female"}},
                                   {"geography", {"Asia", "Europe"}}};
  std::stringstream ss;
  write_schemas(ss, schemas);
  CHECK(read_schemas(ss) == schemas);

  std::istringstream bad(R"({"nope": []})");
  CHECK(kind_of([&] { read_schemas(bad); }) == ErrorKind::schema);
}

TEST_CASE("ingest counts records and applies the Unknown fallback") {
  std::istringstream in(
      R"({"id":"d1","text":"a b","groups":{"gender":["male"]}})" "\n"
      R"({"id":"d2","text":"b","groups":{}})" "\n"
      "\n"
      R"({"id":"d3","text":"c"})" "\n");
  auto store = CorpusStore::ingest(in, {fixtures::gender()});
  CHECK(store.size() == 3);
  CHECK(store.labels("d2", "gender") == std::vector<std::string>{"Unknown"});
  CHECK(store.group_vector("d1", "gender") == std::vector<double>{1, 0, 0});
  CHECK(store.group_vector("d3", "gender") == std::vector<double>{0, 0, 1});
  CHECK(store.total_tokens() == 4);
}

TEST_CASE("ingest errors carry their kind and line") {
  SUBCASE("malformed record") {
    std::istringstream in(R"({"id":"d1","text":"a"})" "\n" "{not json\n");
    try {
      CorpusStore::ingest(in, {fixtures::gender()});
      FAIL("no error");
    } catch (const IngestError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).starts_with("line 2: "));
    }
  }
  SUBCASE("unknown subgroup") {
    std::istringstream in(R"({"id":"d1","text":"a","groups":{"gender":["martian"]}})");
    CHECK(kind_of([&] { CorpusStore::ingest(in, {fixtures::gender()}); }) == ErrorKind::schema);
  }
  SUBCASE("duplicate id") {
    std::istringstream in(R"({"id":"d1","text":"a"})" "\n" R"({"id":"d1","text":"b"})");
    CHECK(kind_of([&] { CorpusStore::ingest(in, {fixtures::gender()}); }) == ErrorKind::conflict);
  }
  SUBCASE("missing text") {
    std::istringstream in(R"({"id":"d1"})");
    CHECK(kind_of([&] { CorpusStore::ingest(in, {fixtures::gender()}); }) == ErrorKind::ingest);
  }
}

TEST_CASE("multi-membership splits unit mass") {
  std::vector<std::string> regions;
  for (int i = 0; i < 19; ++i) regions.push_back("R" + std::to_string(i));
  regions.insert(regions.begin() + 3, "Asia");
  regions.insert(regions.begin() + 7, "Europe");
  GroupSchema geo("geography", regions);
  Document d{"d1", "x", {{"geography", {"Asia", "Europe"}}}};
  auto store = CorpusStore::from_documents({d}, {geo});
  auto v = store.group_vector("d1", "geography");
  REQUIRE(v.size() == 22);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool hit = i == *geo.index_of("Asia") || i == *geo.index_of("Europe");
    CHECK(v[i] == doctest::Approx(hit ? 0.5 : 0.0));
  }
}

TEST_CASE("lookups of unknown ids or categories fail") {
  auto store = fixtures::store({fixtures::doc("d1", "a", {"male"})});
  CHECK(kind_of([&] { store.group_vector("zz", "gender"); }) == ErrorKind::lookup);
  CHECK(kind_of([&] { store.group_vector("d1", "planet"); }) == ErrorKind::lookup);
  CHECK(store.group_vector_or_unknown("zz", store.schema("gender")) == std::vector<double>{0, 0, 1});
}

TEST_CASE("JSONL round-trip keeps records") {
  std::vector<Document> docs{fixtures::doc("d1", "Hello \"world\"", {"male", "female"}),
                             fixtures::doc("d2", "caf\xc3\xa9 ok")};
  auto store = fixtures::store(docs);
  std::stringstream ss;
  store.write_jsonl(ss);
  auto back = CorpusStore::ingest(ss, {fixtures::gender()});
  REQUIRE(back.size() == 2);
  CHECK(back.document("d1") == docs[0]);
  CHECK(back.document(1).text == docs[1].text);
}
