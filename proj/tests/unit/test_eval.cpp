#include "unit.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "regir/eval.hpp"
#include "test_support.hpp"

using namespace regir;

namespace {

RankedList ranked(const std::vector<std::string>& ids, const std::string& qid = "q") {
  RankedList l{qid, {}};
  double s = static_cast<double>(ids.size());
  for (const auto& d : ids) l.entries.push_back({d, s--, "t"});
  return l;
}

}  // namespace

TEST_CASE("recall at k" * doctest::test_suite("eval")) {
  CHECK(recall_at_k(ranked({"a", "x", "b", "y", "z"}), {"a", "b"}, 5) == 1.0);
  CHECK(recall_at_k(ranked({"a", "x", "b"}), {"a", "b"}, 2) == 0.5);
  CHECK(recall_at_k(ranked({}), {"a"}, 10) == 0.0);
  CHECK_THROWS_AS(recall_at_k(ranked({"a"}), {}, 1), std::invalid_argument);
}

TEST_CASE("nDCG hand values" * doctest::test_suite("eval")) {
  CHECK(ndcg_at_k(ranked({"r", "x"}), {"r"}, 20) == 1.0);
  CHECK_NEAR(ndcg_at_k(ranked({"x", "r"}), {"r"}, 20), std::log(2.0) / std::log(3.0), 1e-12);
  CHECK_NEAR(ndcg_at_k(ranked({"x", "r"}), {"r"}, 20), 0.6309, 1e-4);
  CHECK_NEAR(ndcg_at_k(ranked({"r1", "x", "r2"}), {"r1", "r2"}, 3), 0.9197, 1e-4);
  CHECK(ndcg_at_k(ranked({"x", "r"}), {"r"}, 1) == 0.0);
}

TEST_CASE("nDCG matches an independent scorer on random lists" * doctest::test_suite("eval")) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 30;
    std::vector<std::string> ids;
    std::vector<bool> rel_at;
    RelevantSet rel;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("d" + std::to_string(i));
      const bool r = rng() % 4 == 0;
      rel_at.push_back(r);
      if (r) rel.insert(ids.back());
    }
    const std::size_t extra = rng() % 3;
    for (std::size_t i = 0; i < extra; ++i) rel.insert("missing" + std::to_string(i));
    if (rel.empty()) continue;
    const std::size_t k = 1 + rng() % 25;
    CHECK_NEAR(ndcg_at_k(ranked(ids), rel, k), regir::testing::naive_ndcg(rel_at, rel.size(), k), 1e-12);
  }
}

TEST_CASE("R-precision" * doctest::test_suite("eval")) {
  CHECK(r_precision(ranked({"a", "b", "x"}), {"a", "b"}) == 1.0);
  CHECK(r_precision(ranked({"a", "x", "b"}), {"a", "b"}) == 0.5);
  CHECK(r_precision(ranked({"a", "x", "b"}), {"a", "b", "c", "d", "e"}) == 2.0 / 5.0);
}

TEST_CASE("evaluate excludes queries without judgments" * doctest::test_suite("eval")) {
  RunFile run;
  run.emplace("q1", ranked({"a", "b"}, "q1"));
  run.emplace("q2", ranked({"x"}, "q2"));
  Qrels qrels({{"q1", {"a"}}, {"q3", {"z"}}});
  auto rep = evaluate(run, qrels, {"q1", "q2", "q3"});
  CHECK(rep.per_query.size() == 2);
  CHECK(rep.excluded == std::vector<std::string>{"q2"});
  CHECK(rep.mean_r_at_20 == 0.5);
  CHECK(rep.mean_rp == 0.5);

  regir::testing::TempDir dir;
  rep.save(dir / "eval.csv", "deadbeef");
  auto back = EvalReport::load(dir / "eval.csv");
  REQUIRE(back.per_query.size() == 2);
  CHECK(back.per_query[0].query_id == "q1");
  CHECK(back.mean_r_at_20 == doctest::Approx(0.5));
}

TEST_CASE("aggregate mean and population sd" * doctest::test_suite("eval")) {
  auto report = [](double v) {
    EvalReport r;
    r.per_query.push_back({"q", v, v, v});
    r.mean_r_at_20 = r.mean_ndcg_at_20 = r.mean_rp = v;
    return r;
  };
  std::vector<EvalReport> three{report(40), report(43), report(46)};
  auto agg = aggregate_runs(three);
  CHECK(agg.runs == 3);
  CHECK(agg.get("r_at_20").mean == 43.0);
  CHECK_NEAR(agg.get("r_at_20").sd, std::sqrt(6.0), 1e-12);
  std::vector<EvalReport> same{report(0.5), report(0.5)};
  CHECK(aggregate_runs(same).get("rp").sd == 0.0);
  std::vector<EvalReport> one{report(0.2)};
  CHECK(aggregate_runs(one).get("ndcg_at_20").sd == 0.0);

  auto other = report(0.1);
  other.per_query[0].query_id = "different";
  std::vector<EvalReport> mismatched{report(0.1), other};
  CHECK_THROWS(aggregate_runs(mismatched));
  CHECK(format_mean_sd(0.4333, 0.002) == "43.3 (± 0.2)");
}

TEST_CASE("recall curve ends at R@k_max" * doctest::test_suite("eval")) {
  RunFile run;
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("d" + std::to_string(i));
  run.emplace("q", ranked(ids, "q"));
  Qrels qrels({{"q", {"d2", "d7", "zz"}}});
  auto curve = recall_curve(run, qrels, {"q"}, 10);
  REQUIRE(curve.size() == 10);
  CHECK(curve[1] == 0.0);
  CHECK(curve[2] == doctest::Approx(1.0 / 3.0));
  CHECK(curve.back() == mean_recall_at_k(run, qrels, {"q"}, 10));
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] >= curve[i - 1]);
  std::ostringstream out;
  write_recall_curve(curve, out);
  CHECK(out.str().rfind("k,recall\n1,", 0) == 0);
}
