#include <doctest.h>

#include <cmath>
#include <limits>

#include <json.hpp>

#include "fairqr/error.hpp"
#include "fairqr/eval.hpp"
#include "fixtures.hpp"

using namespace fairqr;

TEST_CASE("nDCG oracles") {
  Qrels qrels({{"q", "0", "d1", 2}, {"q", "0", "d2", 1}});
  CHECK(ndcg_at_k(fixtures::ranked({"d2", "d1"}), qrels, "q", 2) ==
        doctest::Approx(0.8597186998521972).epsilon(1e-12));
  CHECK(ndcg_at_k(fixtures::ranked({"d1", "d2"}), qrels, "q", 2) == doctest::Approx(1.0));
  CHECK(ndcg_at_k(fixtures::ranked({"x", "y"}), qrels, "q", 2) == 0.0);
  CHECK(ndcg_at_k(fixtures::ranked({"d1"}), qrels, "absent", 2) == 0.0);
  // The ideal list counts judged documents that were never retrieved.
  CHECK(ndcg_at_k(fixtures::ranked({"d1"}), qrels, "q", 2) ==
        doctest::Approx(2.0 / (2.0 + 1.0 / std::log2(3.0))));
  CHECK(ndcg_at_k(fixtures::ranked({"x", "d1"}), qrels, "q", 1) == 0.0);
}

TEST_CASE("composite is the product") {
  CHECK(composite(1, 1) == 1.0);
  CHECK(composite(0.4, 0) == 0.0);
  CHECK(composite(0.6530, 0.9316) == doctest::Approx(0.6083).epsilon(1e-4));
}

TEST_CASE("paired t-test oracles") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 2, 4, 4, 6};
  auto r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(-2.449489742783178).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.07048399691021993).epsilon(1e-9));

  auto same = paired_t_test(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);

  const std::vector<double> shifted{2, 3, 4, 5, 6};
  auto shift = paired_t_test(shifted, a);
  CHECK(shift.t == std::numeric_limits<double>::infinity());
  CHECK(shift.p == 0.0);
  CHECK(paired_t_test(a, shifted).t == -std::numeric_limits<double>::infinity());

  const std::vector<double> one{1};
  CHECK_THROWS_AS(paired_t_test(one, one), Error);
  CHECK_THROWS_AS(paired_t_test(a, one), Error);
}

TEST_CASE("property: t-test is antisymmetric with p in [0,1]") {
  fixtures::Lcg rng(5);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> a(n), b(n);
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = rng.unit();
      b[j] = rng.unit();
    }
    auto ab = paired_t_test(a, b);
    auto ba = paired_t_test(b, a);
    REQUIRE(ab.t == doctest::Approx(-ba.t));
    REQUIRE(ab.p == doctest::Approx(ba.p));
    REQUIRE(ab.p >= 0.0);
    REQUIRE(ab.p <= 1.0);
  }
}

namespace {

// Three queries, six documents; hand-computed expectations below.
struct Fixture {
  CorpusStore store = fixtures::store({fixtures::doc("m1", "t", {"male"}), fixtures::doc("m2", "t", {"male"}),
                                       fixtures::doc("f1", "t", {"female"}), fixtures::doc("f2", "t", {"female"}),
                                       fixtures::doc("u1", "t")});
  Qrels qrels{{{"q1", "0", "m1", 1}, {"q1", "0", "f1", 1},
               {"q2", "0", "f2", 2},
               {"q3", "0", "m2", 1}, {"q3", "0", "u1", 1}}};
  Run run{"fixture", {fixtures::ranked({"m1", "m2"}, "q1"), fixtures::ranked({"f2", "m1"}, "q2"),
                      fixtures::ranked({"u1", "m2"}, "q3")}};
};

}  // namespace

TEST_CASE("evaluate_run on a three-query fixture") {
  Fixture f;
  auto targets = targets_from_qrels(f.qrels, f.store, {"gender"});
  auto report = evaluate_run(f.run, f.qrels, targets, f.store, 2, {"gender"});
  REQUIRE(report.rows.size() == 3);

  // q1: DCG 1, IDCG 1 + 1/log2 3. Exposure (1,0,0) vs (0.5,0.5,0): JS = 0.311278.
  const double idcg = 1.0 + 1.0 / std::log2(3.0);
  const double q1_js = 0.5 * (1.0 * std::log2(1.0 / 0.75)) +
                       0.5 * (0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25));
  CHECK(report.rows[0].query_id == "q1");
  CHECK(report.rows[0].ndcg == doctest::Approx(1.0 / idcg));
  CHECK(report.rows[0].categories.at("gender").awrf == doctest::Approx(1.0 - q1_js));

  // q2: perfect ranking; exposure (0.5,0.5,0) vs target (0,1,0).
  const double q2_js = 0.5 * (0.5 * std::log2(0.5 / 0.25) + 0.5 * std::log2(0.5 / 0.75)) +
                       0.5 * (1.0 * std::log2(1.0 / 0.75));
  CHECK(report.rows[1].ndcg == doctest::Approx(1.0));
  CHECK(report.rows[1].categories.at("gender").awrf == doctest::Approx(1.0 - q2_js));

  // q3: both relevant retrieved; exposure (0.5,0,0.5) equals target.
  CHECK(report.rows[2].ndcg == doctest::Approx(1.0));
  CHECK(report.rows[2].categories.at("gender").awrf == doctest::Approx(1.0));

  const double mean_ndcg = (1.0 / idcg + 1.0 + 1.0) / 3.0;
  const double mean_awrf = ((1.0 - q1_js) + (1.0 - q2_js) + 1.0) / 3.0;
  CHECK(report.aggregate.included == 3);
  CHECK(report.aggregate.excluded == 0);
  CHECK(*report.aggregate.ndcg == doctest::Approx(mean_ndcg));
  CHECK(report.aggregate.categories.at("gender").awrf == doctest::Approx(mean_awrf));
  const double mean_product =
      ((1.0 / idcg) * (1.0 - q1_js) + 1.0 * (1.0 - q2_js) + 1.0) / 3.0;
  CHECK(report.aggregate.categories.at("gender").product == doctest::Approx(mean_product));

  auto json = nlohmann::json::parse(report.to_json());
  CHECK(json.contains("rows"));
  CHECK(report.to_table().find("q2") != std::string::npos);
}

TEST_CASE("missing targets become excluded error rows") {
  Fixture f;
  auto targets = targets_from_qrels(f.qrels, f.store, {"gender"});
  targets.erase("q2");
  auto report = evaluate_run(f.run, f.qrels, targets, f.store, 2, {"gender"});
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[1].error.has_value());
  CHECK(report.aggregate.included == 2);
  CHECK(report.aggregate.excluded == 1);
}

TEST_CASE("empty run gives an explicit empty aggregate") {
  Fixture f;
  auto report = evaluate_run(Run{"empty", {}}, f.qrels, {}, f.store, 2, {"gender"});
  CHECK(report.rows.empty());
  CHECK(report.aggregate.included == 0);
  CHECK_FALSE(report.aggregate.ndcg.has_value());
}

TEST_CASE("ideal fair run scores 1 everywhere") {
  Fixture f;
  Run ideal{"ideal", {fixtures::ranked({"m1", "f1"}, "q1"), fixtures::ranked({"f2"}, "q2"),
                      fixtures::ranked({"m2", "u1"}, "q3")}};
  auto targets = targets_from_qrels(f.qrels, f.store, {"gender"});
  auto report = evaluate_run(ideal, f.qrels, targets, f.store, 2, {"gender"});
  for (const auto& row : report.rows) {
    CHECK(row.ndcg == doctest::Approx(1.0));
    CHECK(row.categories.at("gender").awrf == doctest::Approx(1.0));
    CHECK(row.categories.at("gender").product == doctest::Approx(1.0));
  }
}

TEST_CASE("comparing a report with itself gives t 0 and p 1") {
  Fixture f;
  auto targets = targets_from_qrels(f.qrels, f.store, {"gender"});
  auto report = evaluate_run(f.run, f.qrels, targets, f.store, 2, {"gender"});
  auto sig = compare_reports(report, report);
  CHECK(sig.n == 3);
  CHECK(sig.ndcg.t == 0.0);
  CHECK(sig.ndcg.p == 1.0);
  CHECK(sig.awrf.at("gender").p == 1.0);
}

TEST_CASE("unknown run documents count as non-relevant Unknown") {
  Fixture f;
  Run ghost{"ghost", {fixtures::ranked({"zz1", "zz2"}, "q1")}};
  auto targets = targets_from_qrels(f.qrels, f.store, {"gender"});
  auto report = evaluate_run(ghost, f.qrels, targets, f.store, 2, {"gender"});
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].ndcg == 0.0);
  // (0,0,1) vs (0.5,0.5,0) are disjoint.
  CHECK(report.rows[0].categories.at("gender").awrf == doctest::Approx(0.0));
}
