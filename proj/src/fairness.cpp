#include "fairqr/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>

#include <json.hpp>

#include "fairqr/error.hpp"

namespace fairqr {
namespace {

void require_same_length(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw Error(ErrorKind::dimension, "distribution lengths differ: " +
                                          std::to_string(p.size()) + " vs " +
                                          std::to_string(q.size()));
  if (p.empty()) throw Error(ErrorKind::dimension, "empty distribution");
}

std::vector<double> smooth(std::span<const double> p, double eps) {
  std::vector<double> out(p.begin(), p.end());
  double total = 0.0;
  for (auto& x : out) total += (x += eps);
  for (auto& x : out) x /= total;
  return out;
}

// Sum of p_i log2(p_i / m_i) with 0 log 0 = 0.
double kl2(std::span<const double> p, std::span<const double> m) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log2(p[i] / m[i]);
  return s;
}

}  // namespace

std::string_view to_string(Weighting w) {
  return w == Weighting::uniform ? "uniform" : "log-discount";
}

Weighting parse_weighting(std::string_view name) {
  if (name == "uniform") return Weighting::uniform;
  if (name == "log-discount") return Weighting::log_discount;
  throw Error(ErrorKind::input, "unknown weighting '" + std::string(name) + "'");
}

std::string_view to_string(TargetProvenance p) {
  switch (p) {
    case TargetProvenance::qrels_empirical: return "qrels-empirical";
    case TargetProvenance::uniform: return "uniform";
    case TargetProvenance::explicit_file: return "explicit";
  }
  return "unknown";
}

bool ExposureDistribution::valid() const {
  if (probabilities.empty()) return false;
  double total = 0.0;
  for (double x : probabilities) {
    if (!(x >= 0.0)) return false;
    total += x;
  }
  return std::abs(total - 1.0) <= 1e-9;
}

ExposureDistribution exposure(const RankedList& ranked, const CorpusStore& store,
                              std::string_view category, std::size_t k,
                              Weighting weighting) {
  if (k == 0) throw Error(ErrorKind::input, "cutoff k must be at least 1");
  if (ranked.empty())
    throw Error(ErrorKind::degenerate_exposure,
                "exposure of an empty ranking for query '" + ranked.query_id + "'");
  const auto& schema = store.schema(category);
  const std::size_t depth = std::min(k, ranked.size());

  std::vector<double> acc(schema.size(), 0.0);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    const double w = weighting == Weighting::uniform
                         ? 1.0
                         : 1.0 / std::log2(static_cast<double>(i) + 2.0);
    const auto g = store.group_vector_or_unknown(ranked.entries[i].doc_id, schema);
    for (std::size_t s = 0; s < g.size(); ++s) acc[s] += w * g[s];
    total_weight += w;
  }
  for (auto& x : acc) x /= total_weight;
  return {schema.category(), std::move(acc)};
}

FairnessTarget target_from_qrels(const Qrels& qrels, const CorpusStore& store,
                                 std::string_view query_id,
                                 std::string_view category) {
  if (!qrels.contains(query_id))
    throw Error(ErrorKind::no_target, "query '" + std::string(query_id) + "' has no judgments");
  const auto& schema = store.schema(category);
  std::vector<double> acc(schema.size(), 0.0);
  std::size_t relevant = 0;
  for (const auto& [doc, grade] : qrels.judgments(query_id)) {
    if (grade <= 0) continue;
    const auto g = store.group_vector_or_unknown(doc, schema);
    for (std::size_t s = 0; s < g.size(); ++s) acc[s] += g[s];
    ++relevant;
  }
  if (relevant == 0)
    throw Error(ErrorKind::no_target,
                "query '" + std::string(query_id) + "' has no relevant documents");
  for (auto& x : acc) x /= static_cast<double>(relevant);
  return {std::string(query_id), schema.category(), {schema.category(), std::move(acc)},
          TargetProvenance::qrels_empirical};
}

FairnessTarget uniform_target(const GroupSchema& schema, std::string query_id) {
  std::vector<double> p(schema.size(), 1.0 / static_cast<double>(schema.size()));
  return {std::move(query_id), schema.category(), {schema.category(), std::move(p)},
          TargetProvenance::uniform};
}

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double smoothing) {
  require_same_length(p, q);
  if (smoothing < 0.0) throw Error(ErrorKind::input, "smoothing must be nonnegative");
  const auto ps = smooth(p, smoothing);
  const auto qs = smooth(q, smoothing);
  double d = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i] > 0.0) d += ps[i] * std::log(ps[i] / qs[i]);
  // Rounding can leave a tiny negative residue for near-identical inputs.
  return std::max(d, 0.0);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q);
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double js = 0.5 * kl2(p, m) + 0.5 * kl2(q, m);
  return std::clamp(js, 0.0, 1.0);
}

double awrf(const RankedList& ranked, const FairnessTarget& target,
            const CorpusStore& store, std::size_t k, Weighting weighting) {
  const auto e = exposure(ranked, store, target.category, k, weighting);
  return 1.0 - js_divergence(e.probabilities, target.target.probabilities);
}

std::size_t most_underrepresented_index(std::span<const double> current,
                                        std::span<const double> target) {
  require_same_length(current, target);
  std::size_t best = 0;
  double best_deficit = target[0] - current[0];
  for (std::size_t i = 1; i < current.size(); ++i) {
    const double deficit = target[i] - current[i];
    if (deficit > best_deficit) {
      best = i;
      best_deficit = deficit;
    }
  }
  return best;
}

std::string most_underrepresented(const ExposureDistribution& current,
                                  const ExposureDistribution& target,
                                  const GroupSchema& schema) {
  if (current.probabilities.size() != schema.size())
    throw Error(ErrorKind::dimension, "distribution does not match schema " + schema.category());
  return schema.label(most_underrepresented_index(current.probabilities, target.probabilities));
}

TargetMap read_targets(std::istream& in, const std::vector<GroupSchema>& schemas) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::input, std::string("target file: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::input, "target file must be a JSON object");

  TargetMap targets;
  for (const auto& [query, per_category] : j.items()) {
    if (!per_category.is_object())
      throw Error(ErrorKind::input, "targets for " + query + " must be an object");
    for (const auto& [category, dist] : per_category.items()) {
      const GroupSchema* schema = nullptr;
      for (const auto& s : schemas)
        if (s.category() == category) schema = &s;
      if (!schema) throw Error(ErrorKind::schema, "target category '" + category + "' not in schema");
      if (!dist.is_object())
        throw Error(ErrorKind::input, "target " + query + "/" + category + " must map subgroup to probability");

      ExposureDistribution e{category, std::vector<double>(schema->size(), 0.0)};
      for (const auto& [label, p] : dist.items()) {
        auto idx = schema->index_of(label);
        if (!idx) throw Error(ErrorKind::schema, "target subgroup '" + label + "' not in " + category);
        if (!p.is_number()) throw Error(ErrorKind::input, "target probability must be a number");
        e.probabilities[*idx] = p.get<double>();
      }
      if (!e.valid())
        throw Error(ErrorKind::input, "target " + query + "/" + category + " is not a distribution");
      targets[query].emplace(category, FairnessTarget{query, category, std::move(e),
                                                      TargetProvenance::explicit_file});
    }
  }
  return targets;
}

}  // namespace fairqr
