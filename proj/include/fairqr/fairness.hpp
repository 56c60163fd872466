#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairqr/corpus.hpp"
#include "fairqr/index.hpp"
#include "fairqr/trec.hpp"

namespace fairqr {

/// Position weights used when aggregating group vectors over a ranking.
enum class Weighting {
  uniform,       // plain mean over the top k
  log_discount,  // 1/log2(rank+1), normalized over the considered positions
};

std::string_view to_string(Weighting w);
Weighting parse_weighting(std::string_view name);

/// Probability vector over a category's subgroups, in schema order.
struct ExposureDistribution {
  std::string category;
  std::vector<double> probabilities;

  /// Entries nonnegative, sum 1 within 1e-9.
  bool valid() const;
  bool operator==(const ExposureDistribution&) const = default;
};

enum class TargetProvenance { qrels_empirical, uniform, explicit_file };

std::string_view to_string(TargetProvenance p);

struct FairnessTarget {
  std::string query_id;
  std::string category;
  ExposureDistribution target;
  TargetProvenance provenance = TargetProvenance::qrels_empirical;
};

inline constexpr double kDefaultKlSmoothing = 1e-6;

/// Group exposure of the top-min(k, n) documents. Ids absent from the corpus
/// count as Unknown.
ExposureDistribution exposure(const RankedList& ranked, const CorpusStore& store,
                              std::string_view category, std::size_t k,
                              Weighting weighting = Weighting::uniform);

/// Mean group vector of the query's documents with grade > 0.
FairnessTarget target_from_qrels(const Qrels& qrels, const CorpusStore& store,
                                 std::string_view query_id,
                                 std::string_view category);

FairnessTarget uniform_target(const GroupSchema& schema, std::string query_id);

/// Smoothed KL(p || q) in nats.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double smoothing = kDefaultKlSmoothing);

/// Jensen-Shannon divergence in bits, in [0, 1].
double js_divergence(std::span<const double> p, std::span<const double> q);

/// 1 - JS(exposure, target).
double awrf(const RankedList& ranked, const FairnessTarget& target,
            const CorpusStore& store, std::size_t k,
            Weighting weighting = Weighting::uniform);

/// Index of the largest target - current deficit; first in schema order on ties.
std::size_t most_underrepresented_index(std::span<const double> current,
                                        std::span<const double> target);
std::string most_underrepresented(const ExposureDistribution& current,
                                  const ExposureDistribution& target,
                                  const GroupSchema& schema);

/// query id -> category -> target.
using TargetMap = std::map<std::string, std::map<std::string, FairnessTarget, std::less<>>, std::less<>>;

/// Explicit targets: {"<query>": {"<category>": {"<subgroup>": p, ...}}}.
/// Subgroups left out get probability 0.
TargetMap read_targets(std::istream& in, const std::vector<GroupSchema>& schemas);

}  // namespace fairqr
