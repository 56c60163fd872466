#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "fairqr/corpus.hpp"
#include "fairqr/index.hpp"

namespace fixtures {

inline fairqr::GroupSchema gender() { return {"gender", {"male", "female"}}; }

inline fairqr::Document doc(std::string id, std::string text, std::vector<std::string> gender = {}) {
  fairqr::Document d{std::move(id), std::move(text), {}};
  if (!gender.empty()) d.groups.push_back({"gender", std::move(gender)});
  return d;
}

inline fairqr::CorpusStore store(std::vector<fairqr::Document> docs) {
  return fairqr::CorpusStore::from_documents(std::move(docs), {gender()});
}

inline fairqr::RankedList ranked(std::vector<std::string> ids, std::string qid = "q") {
  fairqr::RankedList l{std::move(qid), {}};
  double s = static_cast<double>(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) l.entries.push_back({ids[i], s - i, i + 1});
  return l;
}

// Small deterministic LCG for property tests; keeps draws identical everywhere.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() {
    s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return s_ >> 11;
  }
  double unit() { return static_cast<double>(next()) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  // Point on the simplex; some coordinates forced to zero to hit the edges.
  std::vector<double> simplex(std::size_t n) {
    std::vector<double> v(n);
    double total = 0.0;
    for (auto& x : v) {
      x = below(5) == 0 ? 0.0 : unit();
      total += x;
    }
    if (total == 0.0) {
      v[below(n)] = 1.0;
      return v;
    }
    for (auto& x : v) x /= total;
    return v;
  }

 private:
  std::uint64_t s_;
};

}  // namespace fixtures
