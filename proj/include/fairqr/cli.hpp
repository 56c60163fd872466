#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairqr/eval.hpp"
#include "fairqr/refine.hpp"
#include "fairqr/trec.hpp"

namespace fairqr::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, refiner_failure = 3 };

enum class RunMode { bm25, fairqr, fairqr_norerank, mmr };

std::string_view to_string(RunMode mode);
RunMode parse_mode(std::string_view name);

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path schema;
  std::filesystem::path queries;
  std::filesystem::path qrels;
  std::filesystem::path index;    // persisted index; empty builds in memory
  std::filesystem::path targets;  // explicit targets; empty derives from qrels
  std::filesystem::path lexicon;
  std::filesystem::path prompt;   // prompt template override
  std::filesystem::path out = "out";
  std::filesystem::path traces;   // eval: trace directory to summarize

  std::string category;  // empty = first schema category
  std::vector<std::string> categories;  // eval; empty = all schema categories
  std::size_t k = 20;
  std::size_t pool_size = 20;
  std::size_t max_iterations = 5;
  std::string refiner = "lexicon";
  std::string weighting = "uniform";
  double lambda = 0.5;
  double k1 = 1.2;
  double b = 0.75;
  std::size_t jobs = 1;
  std::uint64_t seed = 20250101;

  ChatSettings chat;
  double temperature = 0.3;
};

struct IndexStats {
  std::size_t documents = 0;
  double avgdl = 0.0;
  std::size_t vocabulary = 0;
};

/// Builds the index from the corpus and writes it to `config.index`
/// (default `<out>/index.json`).
IndexStats cmd_index(const RunConfig& config);

struct RunOutcome {
  Run run;
  std::vector<RefinementTrace> traces;  // fairqr modes only, query order
  std::vector<std::string> warnings;
  std::filesystem::path run_file;
  int exit_code = ok;
};

/// Runs every query in `mode` and writes `<out>/run.<mode>.txt` plus, for
/// fairqr modes, `<out>/traces.<mode>/<query>.json`. A supplied refiner
/// replaces the one named in the config.
RunOutcome cmd_run(const RunConfig& config, RunMode mode, Refiner* refiner = nullptr);

struct EvalOutcome {
  RunReport report;
  std::optional<RunReport> comparison;
  std::vector<std::filesystem::path> written;
};

/// Reports for `run_a` (and `run_b`, with paired t-tests of a against b).
EvalOutcome cmd_eval(const RunConfig& config, const std::filesystem::path& run_a,
                     const std::optional<std::filesystem::path>& run_b);

/// Entry point for the `fairqr` executable.
int main(int argc, char** argv);

}  // namespace fairqr::cli
