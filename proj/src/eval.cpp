#include "fairqr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <json.hpp>

#include "fairqr/error.hpp"

namespace fairqr {
namespace {

nlohmann::ordered_json number_or_string(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

nlohmann::ordered_json ttest_json(const TTest& t) {
  return {{"t", number_or_string(t.t)}, {"p", t.p}};
}

std::string fixed(double x, int precision = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

}  // namespace

double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, std::string_view query_id,
                 std::size_t k) {
  if (k < 1) throw Error(ErrorKind::input, "k must be at least 1");
  std::vector<int> ideal;
  for (const auto& [doc, grade] : qrels.judgments(query_id))
    if (grade > 0) ideal.push_back(grade);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i)
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  if (idcg == 0.0) return 0.0;

  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i)
    dcg += qrels.grade(query_id, ranked.entries[i].doc_id) / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

double composite(double ndcg, double awrf) { return ndcg * awrf; }

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::input, "paired samples differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw Error(ErrorKind::input, "paired t-test needs at least 2 pairs");

  std::vector<double> d(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += (d[i] = a[i] - b[i]);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  if (sd == 0.0) {
    if (mean == 0.0) return {0.0, 1.0};
    return {mean > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity(),
            0.0};
  }
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double df = static_cast<double>(n - 1);
  // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
  const double p = boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
  return {t, p};
}

TargetMap targets_from_qrels(const Qrels& qrels, const CorpusStore& store,
                             const std::vector<std::string>& categories) {
  TargetMap targets;
  for (const auto& q : qrels.query_ids()) {
    for (const auto& c : categories) {
      try {
        targets[q].emplace(c, target_from_qrels(qrels, store, q, c));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_target) throw;
      }
    }
  }
  return targets;
}

RunReport evaluate_run(const Run& run, const Qrels& qrels, const TargetMap& targets,
                       const CorpusStore& store, std::size_t k,
                       const std::vector<std::string>& categories, Weighting weighting) {
  RunReport report;
  report.run_id = run.tag;
  report.k = k;
  report.weighting = weighting;
  report.categories = categories;

  std::vector<const RankedList*> lists;
  for (const auto& q : run.queries) lists.push_back(&q);
  std::sort(lists.begin(), lists.end(),
            [](const auto* a, const auto* b) { return a->query_id < b->query_id; });

  for (const auto* list : lists) {
    ReportRow row;
    row.query_id = list->query_id;
    row.ndcg = ndcg_at_k(*list, qrels, list->query_id, k);
    auto per_query = targets.find(list->query_id);
    for (const auto& c : categories) {
      if (per_query == targets.end() || !per_query->second.contains(c)) {
        row.error = "no " + c + " target for query " + list->query_id;
        break;
      }
      try {
        const double a = awrf(*list, per_query->second.find(c)->second, store, k, weighting);
        row.categories.emplace(c, CategoryScore{a, composite(row.ndcg, a)});
      } catch (const Error& e) {
        row.error = e.what();
        break;
      }
    }
    if (row.error) row.categories.clear();
    report.rows.push_back(std::move(row));
  }

  auto& agg = report.aggregate;
  double ndcg_sum = 0.0;
  std::map<std::string, CategoryScore, std::less<>> sums;
  for (const auto& row : report.rows) {
    if (row.error) {
      ++agg.excluded;
      continue;
    }
    ++agg.included;
    ndcg_sum += row.ndcg;
    for (const auto& [c, s] : row.categories) {
      sums[c].awrf += s.awrf;
      sums[c].product += s.product;
    }
  }
  if (agg.included > 0) {
    const auto n = static_cast<double>(agg.included);
    agg.ndcg = ndcg_sum / n;
    for (const auto& [c, s] : sums) agg.categories[c] = {s.awrf / n, s.product / n};
  }
  return report;
}

Significance compare_reports(const RunReport& a, const RunReport& b) {
  std::map<std::string_view, const ReportRow*> rows_b;
  for (const auto& r : b.rows)
    if (!r.error) rows_b.emplace(r.query_id, &r);

  Significance sig;
  sig.comparison_run = b.run_id;
  std::vector<double> na, nb;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> aw;
  for (const auto& ra : a.rows) {
    if (ra.error) continue;
    auto it = rows_b.find(ra.query_id);
    if (it == rows_b.end()) continue;
    na.push_back(ra.ndcg);
    nb.push_back(it->second->ndcg);
    for (const auto& c : a.categories) {
      auto ca = ra.categories.find(c);
      auto cb = it->second->categories.find(c);
      if (ca == ra.categories.end() || cb == it->second->categories.end())
        throw Error(ErrorKind::input, "category " + c + " missing from the comparison run");
      aw[c].first.push_back(ca->second.awrf);
      aw[c].second.push_back(cb->second.awrf);
    }
  }
  sig.n = na.size();
  sig.ndcg = paired_t_test(na, nb);
  for (const auto& [c, v] : aw) sig.awrf[c] = paired_t_test(v.first, v.second);
  return sig;
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["run"] = run_id;
  j["k"] = k;
  j["weighting"] = to_string(weighting);
  j["categories"] = categories;
  auto& rows_json = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["query_id"] = r.query_id;
    o["ndcg"] = r.ndcg;
    auto& cats = o["categories"] = nlohmann::ordered_json::object();
    for (const auto& [c, s] : r.categories) cats[c] = {{"awrf", s.awrf}, {"ndcg_x_awrf", s.product}};
    if (r.trace_summary) o["trace"] = *r.trace_summary;
    if (r.error) o["error"] = *r.error;
    rows_json.push_back(std::move(o));
  }
  nlohmann::ordered_json a;
  a["included"] = aggregate.included;
  a["excluded"] = aggregate.excluded;
  a["ndcg"] = aggregate.ndcg ? nlohmann::ordered_json(*aggregate.ndcg) : nlohmann::ordered_json(nullptr);
  auto& cats = a["categories"] = nlohmann::ordered_json::object();
  for (const auto& [c, s] : aggregate.categories) cats[c] = {{"awrf", s.awrf}, {"ndcg_x_awrf", s.product}};
  j["aggregate"] = std::move(a);
  if (significance) {
    nlohmann::ordered_json s;
    s["comparison_run"] = significance->comparison_run;
    s["n"] = significance->n;
    s["ndcg"] = ttest_json(significance->ndcg);
    auto& aw = s["awrf"] = nlohmann::ordered_json::object();
    for (const auto& [c, t] : significance->awrf) aw[c] = ttest_json(t);
    j["significance"] = std::move(s);
  }
  return j.dump(2) + "\n";
}

std::string RunReport::to_table() const {
  std::vector<std::string> header{"query", "nDCG@" + std::to_string(k)};
  for (const auto& c : categories) {
    header.push_back(c + ":AWRF@" + std::to_string(k));
    header.push_back(c + ":nDCG*AWRF");
  }
  std::vector<std::vector<std::string>> cells{header};
  auto row_cells = [&](std::string name, std::optional<double> ndcg,
                       const std::map<std::string, CategoryScore, std::less<>>& cats,
                       const std::optional<std::string>& error) {
    std::vector<std::string> line{std::move(name)};
    line.push_back(ndcg ? fixed(*ndcg) : "-");
    for (const auto& c : categories) {
      auto it = cats.find(c);
      line.push_back(it == cats.end() ? "-" : fixed(it->second.awrf));
      line.push_back(it == cats.end() ? "-" : fixed(it->second.product));
    }
    if (error) line.push_back("error: " + *error);
    cells.push_back(std::move(line));
  };
  for (const auto& r : rows)
    row_cells(r.query_id, r.error ? std::nullopt : std::optional<double>(r.ndcg),
              r.categories, r.error);
  row_cells("mean", aggregate.ndcg, aggregate.categories, std::nullopt);

  std::vector<std::size_t> width(header.size() + 1, 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());

  std::ostringstream out;
  out << "run: " << run_id << "  (included " << aggregate.included << ", excluded "
      << aggregate.excluded << ")\n";
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i > 0) out << "  ";
      out << line[i];
      if (i + 1 < line.size()) out << std::string(width[i] - line[i].size(), ' ');
    }
    out << '\n';
  }
  if (significance) {
    auto fmt_t = [](const TTest& t) {
      return "t=" + (std::isfinite(t.t) ? fixed(t.t, 3) : std::string(t.t > 0 ? "inf" : "-inf")) +
             " p=" + fixed(t.p, 4);
    };
    out << "paired t-test vs " << significance->comparison_run << " (n=" << significance->n
        << "): nDCG " << fmt_t(significance->ndcg);
    for (const auto& [c, t] : significance->awrf) out << "; " << c << " AWRF " << fmt_t(t);
    out << '\n';
  }
  return out.str();
}

}  // namespace fairqr
