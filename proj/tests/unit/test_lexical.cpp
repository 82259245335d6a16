#include "unit.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "regir/lexical.hpp"
#include "test_support.hpp"

using namespace regir;

namespace {

PostingsIndex index_of(const std::vector<TokenList>& docs) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < docs.size(); ++i) ids.push_back("d" + std::to_string(i + 1));
  return PostingsIndex(ids, docs, TextPipeline::fit(docs, StopwordList{}, false));
}

}  // namespace

TEST_CASE("postings of the two-document toy corpus" * doctest::test_suite("lexical")) {
  auto ix = index_of({{"a", "b", "a"}, {"b", "c"}});
  CHECK(ix.doc_count() == 2);
  CHECK(ix.avg_len() == 2.5);
  auto a = ix.postings("a");
  REQUIRE(a.size() == 1);
  CHECK(a[0].doc == 0);
  CHECK(a[0].tf == 2);
  auto b = ix.postings("b");
  REQUIRE(b.size() == 2);
  CHECK(b[0].tf == 1);
  CHECK(b[1].tf == 1);
  CHECK(ix.postings("c").size() == 1);
  CHECK(ix.postings("zzz").empty());
  CHECK(ix.doc_len("d1") == 3);
  CHECK(ix.terms() == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("toy BM25 score matches hand arithmetic" * doctest::test_suite("lexical")) {
  auto ix = index_of({{"a", "b", "a"}, {"b", "c"}});
  const double expected = std::log(2.0) * (2.0 * 2.2) / (2.0 + 1.2 * (1.0 - 0.75 + 0.75 * 3.0 / 2.5));
  CHECK_NEAR(ix.score({"a"}, "d1", {1.2, 0.75}), expected, 1e-12);
  CHECK_NEAR(ix.score({"a"}, "d1", {1.2, 0.75}), 0.9023, 1e-4);
  CHECK(ix.score({"c"}, "d1", {1.2, 0.75}) == 0.0);
  CHECK(ix.score({"unseen"}, "d2", {1.2, 0.75}) == 0.0);
}

TEST_CASE("repeated query terms count with multiplicity" * doctest::test_suite("lexical")) {
  auto ix = index_of({{"a", "b", "a"}, {"b", "c"}});
  const double once = ix.score({"a"}, "d1", {1.2, 0.75});
  CHECK_REL(ix.score({"a", "a"}, "d1", {1.2, 0.75}), 2.0 * once, 1e-12);
}

TEST_CASE("b = 0 removes length normalization" * doctest::test_suite("lexical")) {
  auto ix = index_of({{"x", "y"}, {"x", "y", "z", "w", "v", "u"}, {"q"}});
  CHECK(ix.score({"x"}, "d1", {1.2, 0.0}) == ix.score({"x"}, "d2", {1.2, 0.0}));
  CHECK(ix.score({"x"}, "d1", {1.2, 0.75}) > ix.score({"x"}, "d2", {1.2, 0.75}));
}

TEST_CASE("search returns the whole pool when k exceeds it" * doctest::test_suite("lexical")) {
  auto ix = index_of({{"a", "b", "a"}, {"b", "c"}, {"d"}});
  auto hits = ix.search({"q", {"b"}}, {1.2, 0.75}, 50);
  CHECK(hits.size() == 3);
  CHECK(is_well_formed(hits));
  CHECK(hits.entries.back().doc_id == "d3");
  CHECK(hits.entries.back().score == 0.0);
  CHECK(hits.entries.front().stage == "bm25");
}

TEST_CASE("search ordering equals a full-scan oracle" * doctest::test_suite("lexical")) {
  std::mt19937_64 rng(2024);
  for (int corpus = 0; corpus < 5; ++corpus) {
    auto docs = regir::testing::random_corpus(rng, 60, 80, 25);
    auto ix = index_of(docs);
    for (int q = 0; q < 10; ++q) {
      const auto& query = docs[rng() % docs.size()];
      auto hits = ix.search({"q", query}, {0.9, 0.4}, docs.size());
      std::vector<std::pair<std::string, double>> oracle;
      for (std::size_t d = 0; d < docs.size(); ++d)
        oracle.emplace_back("d" + std::to_string(d + 1), regir::testing::naive_bm25(query, docs, d, 0.9, 0.4));
      oracle = regir::testing::sort_desc(oracle);
      REQUIRE(hits.size() == oracle.size());
      for (std::size_t r = 0; r < oracle.size(); ++r) {
        CHECK(std::abs(hits.entries[r].score - oracle[r].second) <= std::max(1e-9 * std::abs(oracle[r].second), 1e-12));
      }
    }
  }
}

TEST_CASE("index serialization is deterministic and lossless" * doctest::test_suite("lexical")) {
  Collection pool(CollectionTag::UK, {{"u1", "Batteries Regulations 2009", "producer obligations for batteries", 2009, CollectionTag::UK},
                                      {"u2", "Waste Order", "waste management and batteries", 2010, CollectionTag::UK},
                                      {"u3", "Food Act", "labelling of food", 1990, CollectionTag::UK}});
  auto a = PostingsIndex::build(pool, StopwordList::english());
  auto b = PostingsIndex::build(pool, StopwordList::english());
  CHECK(a.serialize() == b.serialize());
  auto back = PostingsIndex::deserialize(a.serialize());
  CHECK(back.serialize() == a.serialize());
  CHECK(back.doc_ids() == a.doc_ids());
  CHECK(back.score({"batteries"}, "u1", {1.2, 0.75}) == a.score({"batteries"}, "u1", {1.2, 0.75}));
  CHECK_THROWS(PostingsIndex::deserialize("garbage"));
  CHECK_THROWS(PostingsIndex::build(Collection{}, StopwordList::english()));
}

TEST_CASE("parameter validation" * doctest::test_suite("lexical")) {
  CHECK_NOTHROW(Bm25Params{0.0, 1.0}.validate());
  CHECK_THROWS(Bm25Params{-0.1, 0.5}.validate());
  CHECK_THROWS(Bm25Params{1.2, 1.5}.validate());
  CHECK(in_textbook_range({1.2, 0.75}));
  CHECK_FALSE(in_textbook_range({3.0, 0.75}));
  CHECK_FALSE(in_textbook_range({1.2, 0.1}));
  CHECK(default_k1_grid().size() == 16);
  CHECK(default_b_grid().size() == 11);
}

TEST_CASE("grid search picks the cell that demotes a long decoy" * doctest::test_suite("lexical")) {
  TokenList decoy{"x", "x"};
  for (int i = 0; i < 60; ++i) decoy.push_back("pad" + std::to_string(i));
  std::vector<TokenList> docs{{"x", "r"}, decoy, {"f1", "f2"}, {"f3"}, {"f4", "f5", "f6"}};
  auto ix = index_of(docs);
  std::vector<QueryInput> queries{{"q1", {"x"}}};
  Qrels qrels(std::map<std::string, RelevantSet>{{"q1", {"d1"}}});

  auto single = tune_bm25(ix, queries, qrels, {1.2}, {0.75}, 1);
  CHECK(single.best.k1 == 1.2);
  CHECK(single.best.b == 0.75);

  auto res = tune_bm25(ix, queries, qrels, {1.2}, {0.0, 1.0}, 1);
  CHECK(res.grid.at(0, 0) == 0.0);
  CHECK(res.grid.at(0, 1) == 1.0);
  CHECK(res.best.b == 1.0);
  CHECK(res.best_recall == 1.0);

  auto tie = tune_bm25(ix, queries, qrels, {0.5, 1.0}, {1.0}, 1);
  CHECK(tie.best.k1 == 0.5);

  regir::testing::TempDir dir;
  {
    std::ofstream out(dir / "grid.csv");
    res.grid.write_csv(out, "abc");
  }
  auto back = Bm25Grid::read_csv(dir / "grid.csv");
  CHECK(back.k1_values == res.grid.k1_values);
  CHECK(back.b_values == res.grid.b_values);
  CHECK(back.recall == res.grid.recall);
}
