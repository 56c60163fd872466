#include "fairqr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "fairqr/error.hpp"

namespace fairqr {
namespace {

constexpr std::string_view kSyllables[] = {"ba", "ko", "mi", "tu", "re", "sa", "lo", "ne",
                                           "di", "fu", "ga", "pe", "vo", "zi", "ha", "ru",
                                           "te", "mo", "ki", "la"};
constexpr std::size_t kSyllableCount = std::size(kSyllables);
constexpr std::size_t kWordSpace = kSyllableCount * kSyllableCount * kSyllableCount;

std::string pseudo_word(std::size_t i) {
  std::string w;
  for (int s = 0; s < 3; ++s) {
    w += kSyllables[i % kSyllableCount];
    i /= kSyllableCount;
  }
  return w;
}

// Portable draws: the standard distributions are implementation-defined, so
// the same seed would not give the same corpus on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::size_t in(MentionRange r) { return r.min + below(r.max - r.min + 1); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

void check_range(MentionRange r, const char* name) {
  if (r.min > r.max) throw Error(ErrorKind::spec, std::string(name) + ": min exceeds max");
}

// Splits `total` over weights by largest remainder; ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size(), 0);
  if (weights.empty() || total == 0) return out;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t given = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = sum > 0 ? total * weights[i] / sum : double(total) / weights.size();
    out[i] = static_cast<std::size_t>(std::floor(exact));
    given += out[i];
    rem.emplace_back(exact - out[i], i);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; given < total; ++j, ++given) ++out[rem[j % rem.size()].second];
  return out;
}

}  // namespace

SkewSpec SkewSpec::gender_default() {
  SkewSpec spec;
  spec.subgroups = {{"male", 0.8, {"men", "his", "man"}},
                    {"female", 0.2, {"women", "her", "woman"}}};
  return spec;
}

void SkewSpec::validate() const {
  if (topic_count == 0) throw Error(ErrorKind::spec, "topic_count must be positive");
  if (doc_count < topic_count) throw Error(ErrorKind::spec, "doc_count must be at least topic_count");
  if (subgroups.size() < 2) throw Error(ErrorKind::spec, "need at least two subgroups");
  if (category.empty()) throw Error(ErrorKind::spec, "category name is empty");
  double total = 0.0;
  for (const auto& s : subgroups) {
    if (!(s.proportion >= 0.0)) throw Error(ErrorKind::spec, "negative proportion for " + s.label);
    if (s.markers.empty()) throw Error(ErrorKind::spec, "subgroup " + s.label + " has no marker terms");
    if (s.label == kUnknownSubgroup) throw Error(ErrorKind::spec, "Unknown is reserved");
    total += s.proportion;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::spec, "proportions must sum to 1");
  if (!(skew >= 0.0 && skew <= 1.0)) throw Error(ErrorKind::spec, "skew must lie in [0, 1]");
  if (!(distractor_rate >= 0.0 && distractor_rate <= 1.0))
    throw Error(ErrorKind::spec, "distractor_rate must lie in [0, 1]");
  if (topic_vocabulary == 0 || query_terms == 0 || query_terms > topic_vocabulary)
    throw Error(ErrorKind::spec, "need 1 <= query_terms <= topic_vocabulary");
  if (filler_vocabulary == 0) throw Error(ErrorKind::spec, "filler_vocabulary must be positive");
  if (topic_count * topic_vocabulary + filler_vocabulary > kWordSpace)
    throw Error(ErrorKind::spec, "vocabulary exceeds the pseudo-word space");
  check_range(majority_topic_mentions, "majority_topic_mentions");
  check_range(minority_topic_mentions, "minority_topic_mentions");
  check_range(marker_mentions, "marker_mentions");
  check_range(doc_length, "doc_length");
  check_range(distractor_mentions, "distractor_mentions");
}

SyntheticData generate(const SkewSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticData data;

  std::vector<std::string> labels;
  std::size_t majority = 0;
  for (std::size_t i = 0; i < spec.subgroups.size(); ++i) {
    labels.push_back(spec.subgroups[i].label);
    if (spec.subgroups[i].proportion > spec.subgroups[majority].proportion) majority = i;
  }
  data.schemas.emplace_back(spec.category, labels);

  auto topic_word = [&](std::size_t topic, std::size_t j) {
    return pseudo_word(topic * spec.topic_vocabulary + j);
  };
  auto filler_word = [&](std::size_t j) {
    return pseudo_word(spec.topic_count * spec.topic_vocabulary + j);
  };

  std::vector<double> minority_weights;
  for (std::size_t i = 0; i < spec.subgroups.size(); ++i)
    minority_weights.push_back(i == majority ? 0.0 : spec.subgroups[i].proportion);

  const auto per_topic = apportion(spec.doc_count, std::vector<double>(spec.topic_count, 1.0));
  std::size_t next_id = 1;
  for (std::size_t t = 0; t < spec.topic_count; ++t) {
    const std::size_t n = per_topic[t];
    const auto major_count =
        static_cast<std::size_t>(std::llround(spec.skew * static_cast<double>(n)));
    auto counts = apportion(n - major_count, minority_weights);
    counts[majority] += major_count;

    std::vector<std::size_t> members;
    for (std::size_t g = 0; g < counts.size(); ++g) members.insert(members.end(), counts[g], g);
    rng.shuffle(members);

    for (std::size_t g : members) {
      const auto& sub = spec.subgroups[g];
      std::vector<std::string> words;
      const auto topic_mentions =
          rng.in(g == majority ? spec.majority_topic_mentions : spec.minority_topic_mentions);
      // Every on-topic document names at least one query term.
      for (std::size_t m = 0; m < topic_mentions; ++m)
        words.push_back(topic_word(t, rng.below(m == 0 ? spec.query_terms : spec.topic_vocabulary)));
      const auto markers = rng.in(spec.marker_mentions);
      // The primary marker is always present so a refiner appending it reaches
      // every member of the subgroup.
      for (std::size_t m = 0; m < markers; ++m)
        words.push_back(m == 0 ? sub.markers.front() : sub.markers[rng.below(sub.markers.size())]);
      // Only majority documents stray into other topics, which keeps their
      // off-topic hits competing with minority on-topic documents.
      if (g == majority && spec.topic_count > 1 && rng.unit() < spec.distractor_rate) {
        const auto other = (t + 1 + rng.below(spec.topic_count - 1)) % spec.topic_count;
        const auto mentions = rng.in(spec.distractor_mentions);
        for (std::size_t m = 0; m < mentions; ++m)
          words.push_back(topic_word(other, rng.below(spec.query_terms)));
      }
      const auto length = std::max(rng.in(spec.doc_length), words.size());
      while (words.size() < length) words.push_back(filler_word(rng.below(spec.filler_vocabulary)));
      rng.shuffle(words);

      std::string text;
      for (const auto& w : words) {
        if (!text.empty()) text += ' ';
        text += w;
      }
      char id[16];
      std::snprintf(id, sizeof id, "d%04zu", next_id++);
      data.documents.push_back({id, std::move(text), {{spec.category, {sub.label}}}});
      data.doc_topics.push_back(t);
    }
  }

  for (std::size_t t = 0; t < spec.topic_count; ++t) {
    std::string text;
    for (std::size_t j = 0; j < spec.query_terms; ++j) {
      if (j > 0) text += ' ';
      text += topic_word(t, j);
    }
    char id[16];
    std::snprintf(id, sizeof id, "q%02zu", t + 1);
    data.queries.push_back({id, std::move(text)});
    for (std::size_t d = 0; d < data.documents.size(); ++d)
      if (data.doc_topics[d] == t) data.qrels.add({id, "0", data.documents[d].id, 1});
  }

  for (const auto& s : spec.subgroups) data.lexicon[s.label] = s.markers;
  return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("corpus.jsonl");
    for (const auto& d : data.documents) out << to_jsonl(d) << '\n';
  }
  {
    auto out = open("schema.json");
    write_schemas(out, data.schemas);
  }
  {
    auto out = open("queries.tsv");
    write_queries(out, data.queries);
  }
  {
    auto out = open("qrels.txt");
    data.qrels.write(out);
  }
  {
    auto out = open("lexicon.json");
    write_lexicon(out, data.lexicon);
  }
}

}  // namespace fairqr
