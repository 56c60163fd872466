#include "fairqr/refine.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace fairqr {
namespace {

constexpr double kTargetMetThreshold = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

TerminalReason parse_reason(std::string_view s) {
  if (s == "no-decrease") return TerminalReason::no_decrease;
  if (s == "max-iterations") return TerminalReason::max_iterations;
  if (s == "target-met") return TerminalReason::target_met;
  throw Error(ErrorKind::input, "unknown terminal reason '" + std::string(s) + "'");
}

std::optional<ErrorKind> parse_error_kind(std::string_view s) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::io); ++k)
    if (to_string(static_cast<ErrorKind>(k)) == s) return static_cast<ErrorKind>(k);
  return std::nullopt;
}

}  // namespace

void RefinerConfig::validate() const {
  if (max_iterations < 1) throw Error(ErrorKind::input, "max_iterations must be at least 1");
  if (k < 1) throw Error(ErrorKind::input, "k must be at least 1");
  if (k > pool_size) throw Error(ErrorKind::input, "k must not exceed pool_size");
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw Error(ErrorKind::input, "temperature must lie in [0, 2]");
  if (category.empty()) throw Error(ErrorKind::input, "category is required");
}

std::string_view to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::no_decrease: return "no-decrease";
    case TerminalReason::max_iterations: return "max-iterations";
    case TerminalReason::target_met: return "target-met";
  }
  return "unknown";
}

bool RefinementTrace::refiner_failed() const {
  for (const auto& it : iterations)
    if (it.error_kind && (*it.error_kind == ErrorKind::refiner ||
                          *it.error_kind == ErrorKind::parse ||
                          *it.error_kind == ErrorKind::lexicon))
      return true;
  return false;
}

std::string trace_to_json(const RefinementTrace& trace) {
  nlohmann::ordered_json j;
  j["query_id"] = trace.query_id;
  j["category"] = trace.category;
  j["refiner"] = trace.refiner;
  j["terminal_reason"] = to_string(trace.reason);
  j["best_iteration"] = trace.best_iteration;
  auto& its = j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& r : trace.iterations) {
    nlohmann::ordered_json o;
    o["iteration"] = r.iteration;
    o["query"] = r.query;
    o["exposure"] = r.exposure;
    o["divergence"] = std::isfinite(r.divergence) ? nlohmann::ordered_json(r.divergence)
                                                  : nlohmann::ordered_json(nullptr);
    o["subgroup"] = r.subgroup ? nlohmann::ordered_json(*r.subgroup) : nlohmann::ordered_json(nullptr);
    o["accepted"] = r.accepted;
    if (r.raw_response) o["raw_response"] = *r.raw_response;
    if (r.error) o["error"] = *r.error;
    if (r.error_kind) o["error_kind"] = to_string(*r.error_kind);
    its.push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

RefinementTrace trace_from_json(std::string_view json) {
  RefinementTrace t;
  try {
    auto j = nlohmann::json::parse(json);
    t.query_id = j.at("query_id").get<std::string>();
    t.category = j.at("category").get<std::string>();
    t.refiner = j.at("refiner").get<std::string>();
    t.reason = parse_reason(j.at("terminal_reason").get<std::string>());
    t.best_iteration = j.at("best_iteration").get<std::size_t>();
    for (const auto& o : j.at("iterations")) {
      IterationRecord r;
      r.iteration = o.at("iteration").get<std::size_t>();
      r.query = o.at("query").get<std::string>();
      r.exposure = o.at("exposure").get<std::vector<double>>();
      r.divergence = o.at("divergence").is_null() ? kInf : o.at("divergence").get<double>();
      if (!o.at("subgroup").is_null()) r.subgroup = o.at("subgroup").get<std::string>();
      r.accepted = o.at("accepted").get<bool>();
      if (o.contains("raw_response")) r.raw_response = o["raw_response"].get<std::string>();
      if (o.contains("error")) r.error = o["error"].get<std::string>();
      if (o.contains("error_kind")) r.error_kind = parse_error_kind(o["error_kind"].get<std::string>());
      t.iterations.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::input, std::string("trace: ") + e.what());
  }
  return t;
}

FairQrResult fair_qr(const InvertedIndex& index, const CorpusStore& store,
                     std::string_view query, const FairnessTarget& target,
                     const RefinerConfig& config, Refiner& refiner,
                     std::string query_id) {
  config.validate();
  if (target.category != config.category)
    throw Error(ErrorKind::input, "target category '" + target.category +
                                      "' differs from configured '" + config.category + "'");
  const auto& schema = store.schema(config.category);
  if (target.target.probabilities.size() != schema.size())
    throw Error(ErrorKind::dimension, "target does not match schema " + schema.category());

  FairQrResult result;
  auto& trace = result.trace;
  trace.query_id = query_id;
  trace.category = config.category;
  trace.refiner = std::string(refiner.name());

  // Iteration 0: the original query. An untokenizable query propagates.
  result.documents = index.retrieve(query, config.pool_size, query_id);
  IterationRecord first;
  first.query = std::string(query);
  first.accepted = true;
  if (result.documents.empty()) {
    first.divergence = kInf;
    trace.iterations.push_back(std::move(first));
    trace.reason = TerminalReason::no_decrease;
    return result;
  }
  first.exposure =
      exposure(result.documents, store, config.category, config.k, config.weighting).probabilities;
  first.divergence = kl_divergence(first.exposure, target.target.probabilities);
  trace.iterations.push_back(std::move(first));
  if (trace.iterations[0].divergence <= kTargetMetThreshold) {
    trace.reason = TerminalReason::target_met;
    return result;
  }

  trace.reason = TerminalReason::max_iterations;
  for (std::size_t i = 1; i <= config.max_iterations; ++i) {
    const auto& best = trace.iterations[trace.best_iteration];
    const std::string current_query = best.query;
    const double best_divergence = best.divergence;
    const ExposureDistribution current{config.category, best.exposure};

    IterationRecord rec;
    rec.iteration = i;
    rec.subgroup = most_underrepresented(current, target.target, schema);

    RankedList candidate;
    try {
      auto refined = refiner.refine(
          {current_query, schema, target.target, current, config.k, *rec.subgroup});
      rec.query = std::move(refined.query);
      rec.raw_response = std::move(refined.raw_response);
      candidate = index.retrieve(rec.query, config.pool_size, query_id);
    } catch (const ParseError& e) {
      rec.query = e.fallback();
      rec.raw_response = e.response();
      rec.error = e.what();
      rec.error_kind = e.kind();
    } catch (const Error& e) {
      if (rec.query.empty()) rec.query = current_query;
      rec.error = e.what();
      rec.error_kind = e.kind();
    }

    if (rec.error || candidate.empty()) {
      rec.divergence = kInf;
      trace.iterations.push_back(std::move(rec));
      trace.reason = TerminalReason::no_decrease;
      break;
    }

    rec.exposure =
        exposure(candidate, store, config.category, config.k, config.weighting).probabilities;
    rec.divergence = kl_divergence(rec.exposure, target.target.probabilities);
    rec.accepted = rec.divergence < best_divergence;
    trace.iterations.push_back(std::move(rec));
    if (!trace.iterations.back().accepted) {
      trace.reason = TerminalReason::no_decrease;
      break;
    }
    trace.best_iteration = i;
    result.documents = std::move(candidate);
    if (trace.iterations.back().divergence <= kTargetMetThreshold) {
      trace.reason = TerminalReason::target_met;
      break;
    }
  }
  return result;
}

}  // namespace fairqr
