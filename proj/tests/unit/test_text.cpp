#include "unit.hpp"

#include <cmath>

#include "regir/text.hpp"

using namespace regir;

TEST_CASE("tokenize drops digits and punctuation" * doctest::test_suite("text")) {
  CHECK(tokenize("The Batteries Act 2009.") == TokenList{"the", "batteries", "act"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a-b") == TokenList{"a", "b"});
  CHECK(tokenize("Directive 2006/66/EC") == TokenList{"directive", "ec"});
}

TEST_CASE("tokenize folds diacritics and case" * doctest::test_suite("text")) {
  CHECK(tokenize("Règlement CAFÉ") == TokenList{"reglement", "cafe"});
  CHECK(tokenize("  multiple\tspaces\nhere ") == TokenList{"multiple", "spaces", "here"});
  CHECK(tokenize("a2b 42") == TokenList{"a2b"});
}

TEST_CASE("stopword list normalizes entries" * doctest::test_suite("text")) {
  StopwordList sw({"The", " and ", "the", ""});
  CHECK(sw.size() == 2);
  CHECK(sw.contains("the"));
  CHECK(sw.contains("and"));
  CHECK_FALSE(sw.contains("act"));
  CHECK(StopwordList::english().contains("the"));
  CHECK(StopwordList::english().size() > 300);
}

TEST_CASE("idf matches the smoothed formula" * doctest::test_suite("text")) {
  std::vector<TokenList> docs{{"a", "b", "a"}, {"b", "c"}};
  auto idf = IdfTable::build(docs, StopwordList{});
  CHECK(idf.doc_count() == 2);
  CHECK_NEAR(idf.idf("a"), std::log(2.0), 1e-12);
  CHECK_NEAR(idf.idf("b"), std::log(0.5 / 2.5 + 1.0), 1e-12);
  CHECK(idf.idf("b") > 0.0);
  CHECK_NEAR(idf.idf("zzz"), std::log(6.0), 1e-12);
  CHECK(idf.df("a") == 1);
  CHECK(idf.df("b") == 2);
  CHECK_THROWS(IdfTable::build(std::vector<TokenList>{}, StopwordList{}));
}

TEST_CASE("stopword average idf covers only stopwords present" * doctest::test_suite("text")) {
  std::vector<TokenList> docs{{"the", "x"}, {"of", "y"}, {"z"}};
  auto idf = IdfTable::build(docs, StopwordList({"the", "of", "and"}));
  const double one = std::log((3.0 - 1.0 + 0.5) / 1.5 + 1.0);
  CHECK_NEAR(idf.stopword_avg_idf(), one, 1e-12);
}

TEST_CASE("denoise removes stopwords and low-idf boilerplate" * doctest::test_suite("text")) {
  std::vector<TokenList> docs;
  for (int i = 0; i < 10; ++i) {
    TokenList d{"shall", "unique" + std::to_string(i)};
    if (i < 9) d.push_back("the");
    docs.push_back(d);
  }
  const StopwordList sw({"the"});
  auto idf = IdfTable::build(docs, sw);
  const double shall = std::log(0.5 / 10.5 + 1.0);
  const double the = std::log(1.5 / 9.5 + 1.0);
  REQUIRE(shall < the);
  CHECK_NEAR(idf.stopword_avg_idf(), the, 1e-12);

  TokenList in{"the", "shall", "unique3", "shall", "unique3"};
  CHECK(denoise(in, idf, sw, true) == TokenList{"unique3", "unique3"});
  CHECK(denoise(in, idf, sw, false) == TokenList{"shall", "unique3", "shall", "unique3"});
  CHECK(denoise({"the", "the"}, idf, sw, true).empty());
}

TEST_CASE("pipeline applies the same processing to any text" * doctest::test_suite("text")) {
  std::vector<TokenList> docs{tokenize("Council directive on batteries"), tokenize("The batteries regulations")};
  auto p = TextPipeline::fit(docs, StopwordList::english(), false);
  CHECK(p.process("The Batteries!") == TokenList{"batteries"});
  CHECK(p.process_tokens({"on", "council"}) == TokenList{"council"});
}
