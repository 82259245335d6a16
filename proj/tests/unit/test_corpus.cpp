#include "unit.hpp"

#include <fstream>

#include "regir/corpus.hpp"
#include "regir/util.hpp"
#include "test_support.hpp"

using namespace regir;
using regir::testing::TempDir;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("ingest reads canonical JSON-lines" * doctest::test_suite("corpus")) {
  TempDir dir;
  write(dir / "c.jsonl",
        R"({"doc_id":"a","title":"Act 2008","body":"x y"})"
        "\n"
        R"({"doc_id":"b","title":"Regulation","body":"","year":1999})"
        "\n"
        R"({"doc_id":"c","title":"Order of 2015","body":"z"})"
        "\n");
  auto c = ingest_collection(dir / "c.jsonl", CollectionTag::UK);
  CHECK(c.size() == 3);
  CHECK(c.tag() == CollectionTag::UK);
  CHECK(c.year_of("a") == 2008);
  CHECK(c.year_of("b") == 1999);
  CHECK(c.year_of("c") == 2015);
  CHECK(c.year_of("missing") == 0);
  CHECK(c.degenerate_count() == 1);
  CHECK(c.at("a").full_text() == "Act 2008\nx y");
  CHECK(c.at("b").full_text() == "Regulation");
  CHECK_THROWS_AS(c.at("nope"), Error);
}

TEST_CASE("ingest rejects duplicates and malformed lines" * doctest::test_suite("corpus")) {
  TempDir dir;
  write(dir / "dup.jsonl", R"({"doc_id":"a","title":"t","body":""})" "\n" R"({"doc_id":"a","title":"u","body":""})" "\n");
  try {
    ingest_collection(dir / "dup.jsonl", CollectionTag::EU);
    FAIL("expected a duplicate error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    CHECK(e.line() == 2);
  }
  write(dir / "bad.jsonl", R"({"doc_id":"a","title":"t","body":""})" "\n{not json}\n");
  CHECK_THROWS_AS(ingest_collection(dir / "bad.jsonl", CollectionTag::EU), ParseError);
  write(dir / "missing.jsonl", R"({"doc_id":"a","body":""})" "\n");
  CHECK_THROWS_AS(ingest_collection(dir / "missing.jsonl", CollectionTag::EU), Error);
  CHECK_THROWS(ingest_collection(dir / "absent.jsonl", CollectionTag::EU));
}

TEST_CASE("ingest and write round-trip" * doctest::test_suite("corpus")) {
  TempDir dir;
  Collection c(CollectionTag::EU, {{"d1", "Directive 2006/66/EC on batteries", "recital\nbody", 2006, CollectionTag::EU},
                                   {"d2", "Untitled", "", 0, CollectionTag::EU},
                                   {"d3", "Quotes \"and\" unicode é", "x", 1987, CollectionTag::EU}});
  write_collection(c, dir / "out.jsonl");
  auto back = ingest_collection(dir / "out.jsonl", CollectionTag::EU);
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& a = c.documents()[i];
    const auto& b = back.documents()[i];
    CHECK(a.doc_id == b.doc_id);
    CHECK(a.title == b.title);
    CHECK(a.body == b.body);
    CHECK(a.year == b.year);
  }
}

TEST_CASE("year resolution prefers the explicit field" * doctest::test_suite("corpus")) {
  CHECK(resolve_year(2001, "Act 1999") == 2001);
  CHECK(resolve_year(std::nullopt, "The Batteries Regulations 2009") == 2009);
  CHECK(resolve_year(std::nullopt, "Regulation 12345 of no year") == 0);
  CHECK(resolve_year(std::nullopt, "") == 0);
}

TEST_CASE("corpus statistics count whitespace tokens" * doctest::test_suite("corpus")) {
  Collection one(CollectionTag::EU, {{"a", "t", "one two three four five six seven eight nine", 2000, CollectionTag::EU}});
  auto s = corpus_stats(one);
  CHECK(s.doc_count == 1);
  CHECK(s.mean_tokens == 10.0);

  Collection mixed(CollectionTag::EU, {{"a", "three word title", "", 0, CollectionTag::EU},
                                       {"b", "t", "x y z w v", 2001, CollectionTag::EU}});
  auto m = corpus_stats(mixed);
  CHECK(m.mean_tokens == (3.0 + 6.0) / 2.0);
  CHECK(m.median_tokens == 4.5);
  CHECK(m.empty_body_count == 1);
  CHECK(m.unknown_year_count == 1);
  CHECK(m.year_histogram.at(2001) == 1);
}

TEST_CASE("qrels load and validate ids" * doctest::test_suite("corpus")) {
  TempDir dir;
  Collection q(CollectionTag::EU, {{"q1", "t", "", 0, CollectionTag::EU}});
  Collection p(CollectionTag::UK, {{"d1", "t", "", 0, CollectionTag::UK}, {"d2", "t", "", 0, CollectionTag::UK}});
  write(dir / "ok.tsv", "# comment\nq1\td1\nq1\td2\n");
  auto qrels = load_qrels(dir / "ok.tsv", &q, &p);
  CHECK(qrels.relevant("q1") == RelevantSet{"d1", "d2"});
  CHECK(qrels.relevant("q9").empty());
  CHECK(qrels.mean_relevant({"q1"}) == 2.0);

  write(dir / "bad.tsv", "q1\td1\nq1\tghost\n");
  try {
    load_qrels(dir / "bad.tsv", &q, &p);
    FAIL("expected an unknown-id error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
  CHECK_NOTHROW(load_qrels(dir / "bad.tsv", nullptr, nullptr));
}

TEST_CASE("split manifests reject overlap" * doctest::test_suite("corpus")) {
  Collection q(CollectionTag::EU, {{"q1", "t", "", 2000, CollectionTag::EU},
                                   {"q2", "t", "", 2001, CollectionTag::EU},
                                   {"q3", "t", "", 2002, CollectionTag::EU}});
  Collection p(CollectionTag::UK, {{"d1", "t", "", 0, CollectionTag::UK}});
  Qrels qrels({{"q1", {"d1"}}, {"q2", {"d1"}}});
  SplitManifest ok{{"q1"}, {"q2"}, {"q3"}, {"d1"}};
  auto warnings = validate_split(ok, q, p, qrels);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("q3") != std::string::npos);

  SplitManifest overlap{{"q1", "q2"}, {"q2"}, {"q3"}, {"d1"}};
  CHECK_THROWS_AS(validate_split(overlap, q, p, qrels), Error);

  TempDir dir;
  save_split_manifest(ok, dir / "s.json");
  auto back = load_split_manifest(dir / "s.json");
  CHECK(back.train == ok.train);
  CHECK(back.test == ok.test);
  CHECK(back.split("dev") == ok.dev);
}

TEST_CASE("converter maps aliased archive keys" * doctest::test_suite("corpus")) {
  TempDir dir;
  write(dir / "arch.json",
        R"([{"celex_id":"32006L0066","title":"Directive 2006/66/EC","recitals":["r1","r2"],"main_body":"body",
             "relevant_documents":["uksi-1","uksi-2"]}])");
  auto docs = convert_records(dir / "arch.json", CollectionTag::EU);
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].doc_id == "32006L0066");
  CHECK(docs[0].body == "r1\nr2\nbody");
  CHECK(docs[0].year == 2006);
  auto qrels = convert_relevance(dir / "arch.json");
  CHECK(qrels.relevant("32006L0066") == RelevantSet{"uksi-1", "uksi-2"});
}
