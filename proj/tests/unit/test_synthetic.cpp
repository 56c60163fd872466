#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "fairqr/error.hpp"
#include "fairqr/fairness.hpp"
#include "fairqr/synthetic.hpp"
#include "temp_dir.hpp"

using namespace fairqr;

TEST_CASE("same seed gives byte-identical output") {
  auto spec = SkewSpec::gender_default();
  TempDir a("synth_a"), b("synth_b");
  write_synthetic(generate(spec), a.path);
  write_synthetic(generate(spec), b.path);
  for (const char* f : {"corpus.jsonl", "schema.json", "queries.tsv", "qrels.txt", "lexicon.json"})
    CHECK_MESSAGE(read_file(a.path / f) == read_file(b.path / f), f);

  spec.seed += 1;
  TempDir c("synth_c");
  write_synthetic(generate(spec), c.path);
  CHECK(read_file(a.path / "corpus.jsonl") != read_file(c.path / "corpus.jsonl"));
}

TEST_CASE("default suite shape") {
  const auto data = generate(SkewSpec::gender_default());
  CHECK(data.documents.size() == 200);
  CHECK(data.queries.size() == 10);
  REQUIRE(data.schemas.size() == 1);
  CHECK(data.schemas[0].subgroups() == std::vector<std::string>{"male", "female", "Unknown"});
  CHECK(data.lexicon.at("female").front() == "women");
  for (const auto& q : data.queries) CHECK(data.qrels.judgments(q.id).size() == 20);
}

TEST_CASE("skew splits each topic 80/20") {
  auto spec = SkewSpec::gender_default();
  spec.doc_count = 500;
  spec.topic_count = 5;
  const auto data = generate(spec);
  std::vector<int> male(5, 0), total(5, 0);
  for (std::size_t d = 0; d < data.documents.size(); ++d) {
    ++total[data.doc_topics[d]];
    if (data.documents[d].groups.at(0).second.at(0) == "male") ++male[data.doc_topics[d]];
  }
  for (int t = 0; t < 5; ++t) {
    CHECK(total[t] == 100);
    CHECK(male[t] == 80);
  }
}

TEST_CASE("every minority document carries its primary marker") {
  const auto data = generate(SkewSpec::gender_default());
  for (const auto& d : data.documents) {
    const auto& label = d.groups.at(0).second.at(0);
    const auto marker = data.lexicon.at(label).front();
    const auto tokens = tokenize(d.text);
    CHECK(std::find(tokens.begin(), tokens.end(), marker) != tokens.end());
  }
}

TEST_CASE("baseline BM25 over-exposes the majority near the skew") {
  const auto spec = SkewSpec::gender_default();
  const auto data = generate(spec);
  auto store = CorpusStore::from_documents(data.documents, data.schemas);
  auto index = InvertedIndex::build(store);
  double total = 0.0;
  int close = 0;
  for (const auto& q : data.queries) {
    const auto e = exposure(index.retrieve(q.text, 20, q.id), store, "gender", 20);
    const double male = e.probabilities[0];
    CHECK(male >= spec.skew - 0.1);
    CHECK(male <= spec.skew + 0.2 + 1e-9);
    if (std::abs(male - spec.skew) <= 0.1 + 1e-9) ++close;
    total += male;
  }
  CHECK(std::abs(total / 10.0 - spec.skew) <= 0.15);
  CHECK(close >= 1);
}

TEST_CASE("infeasible specs are rejected") {
  auto expect_spec_error = [](SkewSpec s) {
    try {
      generate(s);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::spec);
    }
  };
  auto s = SkewSpec::gender_default();
  s.subgroups[0].proportion = -0.2;
  s.subgroups[1].proportion = 1.2;
  expect_spec_error(s);
  s = SkewSpec::gender_default();
  s.skew = 1.5;
  expect_spec_error(s);
  s = SkewSpec::gender_default();
  s.subgroups.pop_back();
  expect_spec_error(s);
  s = SkewSpec::gender_default();
  s.doc_length = {10, 5};
  expect_spec_error(s);
  s = SkewSpec::gender_default();
  s.query_terms = 9;
  expect_spec_error(s);
  s = SkewSpec::gender_default();
  s.doc_count = 3;
  expect_spec_error(s);
}

TEST_CASE("written files load back through the readers") {
  TempDir dir("synth_load");
  const auto data = generate(SkewSpec::gender_default());
  write_synthetic(data, dir.path);
  std::ifstream schema_in(dir.path / "schema.json");
  auto schemas = read_schemas(schema_in);
  std::ifstream corpus_in(dir.path / "corpus.jsonl");
  auto store = CorpusStore::ingest(corpus_in, schemas);
  CHECK(store.documents() == data.documents);
  std::ifstream q_in(dir.path / "queries.tsv");
  CHECK(read_queries(q_in) == data.queries);
  std::ifstream qrels_in(dir.path / "qrels.txt");
  CHECK(Qrels::read(qrels_in).entries() == data.qrels.entries());
  std::ifstream lex_in(dir.path / "lexicon.json");
  CHECK(read_lexicon(lex_in) == data.lexicon);
}
