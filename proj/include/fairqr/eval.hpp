#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairqr/corpus.hpp"
#include "fairqr/fairness.hpp"
#include "fairqr/index.hpp"
#include "fairqr/trec.hpp"

namespace fairqr {

/// Linear-gain nDCG. The ideal ordering uses every judged document of the
/// query, retrieved or not; 0 when the query has no positive judgments.
double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, std::string_view query_id,
                 std::size_t k);

/// nDCG * AWRF.
double composite(double ndcg, double awrf);

struct TTest {
  double t = 0.0;
  double p = 1.0;  // two-tailed
};

/// Paired Student t-test on a - b with n - 1 degrees of freedom.
/// Zero-variance differences give (0, 1) when the mean is 0 and
/// (+/-inf, 0) otherwise.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct CategoryScore {
  double awrf = 0.0;
  double product = 0.0;
};

struct ReportRow {
  std::string query_id;
  double ndcg = 0.0;
  std::map<std::string, CategoryScore, std::less<>> categories;
  std::optional<std::string> trace_summary;
  std::optional<std::string> error;  // set rows are excluded from aggregates
};

struct Aggregate {
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::optional<double> ndcg;  // empty when no row is included
  std::map<std::string, CategoryScore, std::less<>> categories;
};

struct Significance {
  std::string comparison_run;
  std::size_t n = 0;
  TTest ndcg;
  std::map<std::string, TTest, std::less<>> awrf;
};

struct RunReport {
  std::string run_id;
  std::size_t k = 20;
  Weighting weighting = Weighting::uniform;
  std::vector<std::string> categories;
  std::vector<ReportRow> rows;  // sorted by query id
  Aggregate aggregate;
  std::optional<Significance> significance;

  std::string to_json() const;
  std::string to_table() const;
};

/// Per-query nDCG@k and AWRF@k for each category, with row means. A query
/// lacking a target (or with an empty list) becomes an error row.
RunReport evaluate_run(const Run& run, const Qrels& qrels, const TargetMap& targets,
                       const CorpusStore& store, std::size_t k,
                       const std::vector<std::string>& categories,
                       Weighting weighting = Weighting::uniform);

/// Paired tests of `a` against `b` over queries included in both reports.
Significance compare_reports(const RunReport& a, const RunReport& b);

/// Targets for every qrels query and category, derived from judgments.
/// Queries without relevant documents are left out.
TargetMap targets_from_qrels(const Qrels& qrels, const CorpusStore& store,
                             const std::vector<std::string>& categories);

}  // namespace fairqr
