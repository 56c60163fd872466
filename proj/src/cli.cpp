#include "fairqr/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairqr/rerank.hpp"
#include "fairqr/synthetic.hpp"

namespace fairqr::cli {
namespace {

std::ifstream open_in(const std::filesystem::path& path, std::string_view what) {
  if (path.empty()) throw Error(ErrorKind::io, "no " + std::string(what) + " path given");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + std::string(what) + " '" + path.string() + "'");
  return in;
}

std::string slurp(const std::filesystem::path& path, std::string_view what) {
  auto in = open_in(path, what);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write to a sibling temp file, then rename over the destination.
void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error(ErrorKind::io, "short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

CorpusStore load_store(const RunConfig& config) {
  auto schema_in = open_in(config.schema, "schema");
  auto schemas = read_schemas(schema_in);
  auto corpus_in = open_in(config.corpus, "corpus");
  try {
    return CorpusStore::ingest(corpus_in, std::move(schemas));
  } catch (const Error& e) {
    throw Error(e.kind(), config.corpus.string() + ": " + e.what());
  }
}

InvertedIndex load_or_build_index(const RunConfig& config, const CorpusStore& store) {
  if (config.index.empty()) return InvertedIndex::build(store, {config.k1, config.b});
  auto in = open_in(config.index, "index");
  auto index = InvertedIndex::load(in);
  if (index.doc_count() != store.size())
    throw Error(ErrorKind::io, "index '" + config.index.string() + "' holds " +
                                   std::to_string(index.doc_count()) + " documents, corpus has " +
                                   std::to_string(store.size()));
  for (std::size_t d = 0; d < store.size(); ++d)
    if (index.doc_id(d) != store.document(d).id)
      throw Error(ErrorKind::io, "index '" + config.index.string() + "' was built from another corpus");
  return index;
}

std::string resolve_category(const RunConfig& config, const CorpusStore& store) {
  if (!config.category.empty()) {
    store.schema(config.category);
    return config.category;
  }
  if (store.schemas().empty()) throw Error(ErrorKind::schema, "schema defines no categories");
  return store.schemas().front().category();
}

std::unique_ptr<Refiner> make_refiner(const RunConfig& config, const RefinerConfig& rc) {
  if (config.refiner == "lexicon") {
    auto in = open_in(config.lexicon, "lexicon");
    return std::make_unique<LexiconRefiner>(read_lexicon(in));
  }
  if (config.refiner == "llm") {
    const char* key = std::getenv(config.chat.api_key_env.c_str());
    auto transport = std::make_shared<HttpChatTransport>(config.chat.base_url, key ? key : "");
    std::string tmpl = config.prompt.empty() ? std::string(default_prompt_template())
                                             : slurp(config.prompt, "prompt template");
    return std::make_unique<LlmRefiner>(ChatClient(transport, config.chat), rc, std::move(tmpl));
  }
  throw Error(ErrorKind::input, "unknown refiner '" + config.refiner + "' (lexicon | llm)");
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::input:
    case ErrorKind::spec:
      return usage_error;
    case ErrorKind::refiner:
      return refiner_failure;
    default:
      return data_error;
  }
}

std::string trace_summary(const RefinementTrace& t) {
  std::size_t accepted = 0;
  for (const auto& it : t.iterations)
    if (it.iteration > 0 && it.accepted) ++accepted;
  return "refinements=" + std::to_string(t.iterations.size() - 1) +
         " accepted=" + std::to_string(accepted) + " reason=" + std::string(to_string(t.reason)) +
         " query=\"" + t.best().query + "\"";
}

// Config files are a single JSON object whose keys are long option names of
// the subcommand being run.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must be a JSON object");
    std::vector<std::string> section;
    for (const auto* sub : app_->get_subcommands()) section.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.parents = section;
      item.name = key;
      auto as_text = [](const nlohmann::json& v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
      };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(as_text(v));
      } else {
        item.inputs.push_back(as_text(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

void add_data_options(CLI::App& app, RunConfig& c) {
  app.add_option("--corpus", c.corpus, "Corpus JSONL")->required();
  app.add_option("--schema", c.schema, "Group schema JSON")->required();
}

void add_config(CLI::App& app) {
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON config for the subcommand; flags override its values");
}

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::bm25: return "bm25";
    case RunMode::fairqr: return "fairqr";
    case RunMode::fairqr_norerank: return "fairqr-norerank";
    case RunMode::mmr: return "mmr";
  }
  return "unknown";
}

RunMode parse_mode(std::string_view name) {
  for (auto m : {RunMode::bm25, RunMode::fairqr, RunMode::fairqr_norerank, RunMode::mmr})
    if (to_string(m) == name) return m;
  throw Error(ErrorKind::input, "unknown mode '" + std::string(name) + "'");
}

IndexStats cmd_index(const RunConfig& config) {
  const auto store = load_store(config);
  const auto index = InvertedIndex::build(store, {config.k1, config.b});
  std::ostringstream out;
  index.save(out);
  const auto path = config.index.empty() ? config.out / "index.json" : config.index;
  write_atomic(path, out.str());
  return {index.doc_count(), index.avgdl(), index.vocabulary_size()};
}

RunOutcome cmd_run(const RunConfig& config, RunMode mode, Refiner* refiner) {
  const auto store = load_store(config);
  const auto index = load_or_build_index(config, store);
  const auto category = resolve_category(config, store);
  auto queries_in = open_in(config.queries, "queries");
  const auto queries = read_queries(queries_in);

  RefinerConfig rc;
  rc.max_iterations = config.max_iterations;
  rc.pool_size = config.pool_size;
  rc.k = config.k;
  rc.temperature = config.temperature;
  rc.category = category;
  rc.weighting = parse_weighting(config.weighting);
  rc.validate();

  const bool fair = mode == RunMode::fairqr || mode == RunMode::fairqr_norerank;
  TargetMap targets;
  std::unique_ptr<Refiner> owned;
  if (fair) {
    if (!config.targets.empty()) {
      auto in = open_in(config.targets, "targets");
      targets = read_targets(in, store.schemas());
    } else {
      auto in = open_in(config.qrels, "qrels");
      targets = targets_from_qrels(Qrels::read(in), store, {category});
    }
    if (!refiner) {
      owned = make_refiner(config, rc);
      refiner = owned.get();
    }
  }

  RunOutcome outcome;
  outcome.run.tag = std::string(to_string(mode));
  outcome.run.queries.resize(queries.size());
  if (fair) outcome.traces.resize(queries.size());
  std::vector<std::optional<std::string>> failures(queries.size());
  std::vector<std::optional<std::string>> notes(queries.size());

  parallel_for(queries.size(), config.jobs, [&](std::size_t i) {
    const auto& q = queries[i];
    auto& list = outcome.run.queries[i];
    try {
      switch (mode) {
        case RunMode::bm25:
          list = index.retrieve(q.text, config.pool_size, q.id);
          break;
        case RunMode::mmr:
          list = mmr_rerank(index.retrieve(q.text, config.pool_size, q.id), q.text, store, index,
                            config.lambda, config.k);
          break;
        case RunMode::fairqr:
        case RunMode::fairqr_norerank: {
          FairnessTarget target;
          auto per_query = targets.find(q.id);
          if (per_query != targets.end() && per_query->second.contains(category)) {
            target = per_query->second.find(category)->second;
          } else {
            target = uniform_target(store.schema(category), q.id);
            notes[i] = "query " + q.id + ": no target, using uniform";
          }
          auto result = fair_qr(index, store, q.text, target, rc, *refiner, q.id);
          list = mode == RunMode::fairqr ? semantic_rerank(result.documents, q.text, index)
                                         : std::move(result.documents);
          outcome.traces[i] = std::move(result.trace);
          break;
        }
      }
    } catch (const Error& e) {
      list = RankedList{q.id, {}};
      failures[i] = "query " + q.id + ": " + e.what();
    }
  });

  bool degraded = false;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (notes[i]) outcome.warnings.push_back(*notes[i]);
    if (failures[i]) {
      outcome.warnings.push_back(*failures[i]);
      outcome.exit_code = data_error;
    }
    if (fair && !outcome.traces[i].iterations.empty() && outcome.traces[i].refiner_failed()) {
      degraded = true;
      outcome.warnings.push_back("query " + queries[i].id + ": refiner failed, kept best set (see trace)");
    }
  }
  if (degraded) outcome.exit_code = refiner_failure;

  std::ostringstream run_text;
  write_run(run_text, outcome.run);
  outcome.run_file = config.out / ("run." + std::string(to_string(mode)) + ".txt");
  if (fair) {
    const auto dir = config.out / ("traces." + std::string(to_string(mode)));
    for (std::size_t i = 0; i < queries.size(); ++i) {
      if (outcome.traces[i].iterations.empty()) continue;
      if (queries[i].id.find_first_of("/\\") != std::string::npos)
        throw Error(ErrorKind::input, "query id '" + queries[i].id + "' cannot name a trace file");
      write_atomic(dir / (queries[i].id + ".json"), trace_to_json(outcome.traces[i]));
    }
  }
  write_atomic(outcome.run_file, run_text.str());
  return outcome;
}

EvalOutcome cmd_eval(const RunConfig& config, const std::filesystem::path& run_a,
                     const std::optional<std::filesystem::path>& run_b) {
  const auto store = load_store(config);
  auto qrels_in = open_in(config.qrels, "qrels");
  const auto qrels = Qrels::read(qrels_in);

  std::vector<std::string> categories = config.categories;
  if (categories.empty())
    for (const auto& s : store.schemas()) categories.push_back(s.category());
  for (const auto& c : categories) store.schema(c);

  TargetMap targets;
  if (!config.targets.empty()) {
    auto in = open_in(config.targets, "targets");
    targets = read_targets(in, store.schemas());
  } else {
    targets = targets_from_qrels(qrels, store, categories);
  }
  const auto weighting = parse_weighting(config.weighting);

  auto evaluate = [&](const std::filesystem::path& path) {
    auto in = open_in(path, "run");
    Run run;
    try {
      run = read_run(in);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
    if (run.tag.empty()) run.tag = path.stem().string();
    auto report = evaluate_run(run, qrels, targets, store, config.k, categories, weighting);
    if (!config.traces.empty()) {
      for (auto& row : report.rows) {
        const auto trace_path = config.traces / (row.query_id + ".json");
        if (std::filesystem::exists(trace_path))
          row.trace_summary = trace_summary(trace_from_json(slurp(trace_path, "trace")));
      }
    }
    return report;
  };

  EvalOutcome outcome{evaluate(run_a), std::nullopt, {}};
  if (run_b) {
    outcome.comparison = evaluate(*run_b);
    outcome.report.significance = compare_reports(outcome.report, *outcome.comparison);
  }
  auto emit = [&](const RunReport& r, const std::string& name) {
    const auto json = config.out / ("report." + name + ".json");
    const auto table = config.out / ("report." + name + ".txt");
    write_atomic(json, r.to_json());
    write_atomic(table, r.to_table());
    outcome.written.push_back(json);
    outcome.written.push_back(table);
  };
  emit(outcome.report, run_a.stem().string());
  if (outcome.comparison) emit(*outcome.comparison, run_b->stem().string());
  return outcome;
}

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware retrieval by query refinement"};
  app.require_subcommand(1);
  // Subcommands pass --config up to the top level, where CLI11 reads it.
  app.fallthrough();
  add_config(app);
  app.allow_config_extras(CLI::config_extras_mode::error);
  RunConfig c;

  auto* index_cmd = app.add_subcommand("index", "Build and persist the BM25 index");
  add_data_options(*index_cmd, c);
  index_cmd->add_option("--index", c.index, "Output index path (default <out>/index.json)");
  index_cmd->add_option("--out", c.out, "Output directory");
  index_cmd->add_option("--k1", c.k1, "BM25 k1")->capture_default_str();
  index_cmd->add_option("--b", c.b, "BM25 b")->capture_default_str();

  std::string mode_name = "fairqr";
  auto* run_cmd = app.add_subcommand("run", "Retrieve every query and write a TREC run");
  add_data_options(*run_cmd, c);
  run_cmd->add_option("--mode", mode_name, "bm25 | fairqr | fairqr-norerank | mmr")
      ->capture_default_str();
  run_cmd->add_option("--queries", c.queries, "Queries TSV (id<TAB>text)")->required();
  run_cmd->add_option("--qrels", c.qrels, "TREC qrels used for fairness targets");
  run_cmd->add_option("--targets", c.targets, "Explicit target JSON (overrides qrels)");
  run_cmd->add_option("--index", c.index, "Load a persisted index instead of building one");
  run_cmd->add_option("--category", c.category, "Fairness category to optimize");
  run_cmd->add_option("--k", c.k, "Cutoff for exposure")->capture_default_str();
  run_cmd->add_option("--pool-size", c.pool_size, "Retrieval depth")->capture_default_str();
  run_cmd->add_option("--max-iterations", c.max_iterations)->capture_default_str();
  run_cmd->add_option("--refiner", c.refiner, "lexicon | llm")->capture_default_str();
  run_cmd->add_option("--lexicon", c.lexicon, "Subgroup keyword JSON");
  run_cmd->add_option("--prompt", c.prompt, "Prompt template file");
  run_cmd->add_option("--weighting", c.weighting, "uniform | log-discount")->capture_default_str();
  run_cmd->add_option("--lambda", c.lambda, "MMR trade-off")->capture_default_str();
  run_cmd->add_option("--k1", c.k1)->capture_default_str();
  run_cmd->add_option("--b", c.b)->capture_default_str();
  run_cmd->add_option("--jobs", c.jobs, "Queries processed concurrently")->capture_default_str();
  run_cmd->add_option("--temperature", c.temperature)->capture_default_str();
  run_cmd->add_option("--llm-base-url", c.chat.base_url)->capture_default_str();
  run_cmd->add_option("--llm-path", c.chat.path)->capture_default_str();
  run_cmd->add_option("--llm-model", c.chat.model)->capture_default_str();
  run_cmd->add_option("--llm-api-key-env", c.chat.api_key_env, "Env var holding the API key")
      ->capture_default_str();
  run_cmd->add_option("--llm-retries", c.chat.retries)->capture_default_str();
  run_cmd->add_option("--out", c.out, "Output directory")->capture_default_str();

  std::filesystem::path run_a;
  std::optional<std::filesystem::path> run_b;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate runs: nDCG, AWRF, paired t-test");
  add_data_options(*eval_cmd, c);
  eval_cmd->add_option("--run", run_a, "TREC run file")->required();
  eval_cmd->add_option("--run-b", run_b, "Second run for the paired t-test");
  eval_cmd->add_option("--qrels", c.qrels, "TREC qrels")->required();
  eval_cmd->add_option("--targets", c.targets, "Explicit target JSON");
  eval_cmd->add_option("--category", c.categories, "Categories to evaluate (repeatable)");
  eval_cmd->add_option("--k", c.k)->capture_default_str();
  eval_cmd->add_option("--weighting", c.weighting)->capture_default_str();
  eval_cmd->add_option("--traces", c.traces, "Trace directory to summarize per query");
  eval_cmd->add_option("--out", c.out, "Output directory")->capture_default_str();

  SkewSpec spec = SkewSpec::gender_default();
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic skewed corpus");
  gen_cmd->add_option("--seed", spec.seed)->capture_default_str();
  gen_cmd->add_option("--docs", spec.doc_count)->capture_default_str();
  gen_cmd->add_option("--topics", spec.topic_count)->capture_default_str();
  gen_cmd->add_option("--skew", spec.skew)->capture_default_str();
  gen_cmd->add_option("--distractor-rate", spec.distractor_rate)->capture_default_str();
  gen_cmd->add_option("--out", c.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage_error;
  }

  try {
    if (index_cmd->parsed()) {
      const auto stats = cmd_index(c);
      std::cout << "N=" << stats.documents << " avgdl=" << stats.avgdl
                << " vocabulary=" << stats.vocabulary << '\n';
      return ok;
    }
    if (run_cmd->parsed()) {
      const auto mode = parse_mode(mode_name);
      if ((mode == RunMode::fairqr || mode == RunMode::fairqr_norerank) && c.refiner == "lexicon" &&
          c.lexicon.empty())
        throw Error(ErrorKind::input, "--lexicon is required with the lexicon refiner");
      if ((mode == RunMode::fairqr || mode == RunMode::fairqr_norerank) && c.targets.empty() &&
          c.qrels.empty())
        throw Error(ErrorKind::input, "fairqr modes need --qrels or --targets");
      const auto outcome = cmd_run(c, mode);
      for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "wrote " << outcome.run_file.string() << " (" << outcome.run.queries.size()
                << " queries)\n";
      return outcome.exit_code;
    }
    if (eval_cmd->parsed()) {
      const auto outcome = cmd_eval(c, run_a, run_b);
      std::cout << outcome.report.to_table();
      if (outcome.comparison) std::cout << '\n' << outcome.comparison->to_table();
      return ok;
    }
    if (gen_cmd->parsed()) {
      const auto data = generate(spec);
      write_synthetic(data, c.out);
      std::cout << "wrote " << data.documents.size() << " documents and " << data.queries.size()
                << " queries to " << c.out.string() << '\n';
      return ok;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << '\n';
    return data_error;
  }
  return usage_error;
}

}  // namespace fairqr::cli
