#include "unit.hpp"

#include <fstream>

#include "regir/experiment.hpp"
#include "regir/synthetic.hpp"
#include "regir/util.hpp"
#include "test_support.hpp"

using namespace regir;
using regir::testing::TempDir;

namespace {

void write_config(const std::filesystem::path& path, const std::string& text) { std::ofstream(path) << text; }

const char* kBm25Only =
    "task=EU2UK\n"
    "data.queries=queries.jsonl\n"
    "data.pool=pool.jsonl\n"
    "data.qrels=qrels.tsv\n"
    "data.splits=splits.json\n"
    "prefetch.mode=bm25\n"
    "prefetch.k=20\n"
    "rerank.model=none\n"
    "eval.k_max=10\n"
    "output.dir=out\n";

}  // namespace

TEST_CASE("key-value configs" * doctest::test_suite("experiment")) {
  auto kv = KvConfig::parse("# comment\na.b = 1\n\nc=x\na.b=2\nlist=1, 2,3\nflag=true\n");
  CHECK(kv.get_int("a.b", 0) == 2);
  CHECK(kv.get("c", "") == "x");
  CHECK(kv.get("missing", "fb") == "fb");
  CHECK(kv.get_int_list("list", {}) == std::vector<long>{1, 2, 3});
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.section("a").get_int("b", 0) == 2);
  CHECK_THROWS(kv.require("nope"));
  CHECK_THROWS(KvConfig::parse("no equals sign\n"));
  CHECK(KvConfig::parse(kv.dump()).dump() == kv.dump());
}

TEST_CASE("config validation names the problem" * doctest::test_suite("experiment")) {
  TempDir dir;
  synthetic::write_toy_dataset(synthetic::make_toy_dataset(), dir.path());
  write_config(dir / "a.cfg", std::string(kBm25Only) + "prefetch.k=0\n");
  CHECK_THROWS(ExperimentConfig::load(dir / "a.cfg").validate());
  write_config(dir / "b.cfg", std::string(kBm25Only) + "prefetch.mode=doc-vectors\n");
  CHECK_THROWS(ExperimentConfig::load(dir / "b.cfg").validate());
  write_config(dir / "c.cfg", std::string(kBm25Only) + "task=FR2DE\n");
  CHECK_THROWS(ExperimentConfig::load(dir / "c.cfg"));
  write_config(dir / "d.cfg", kBm25Only);
  auto cfg = ExperimentConfig::load(dir / "d.cfg");
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.queries == dir / "queries.jsonl");
  CHECK(cfg.k == 20);
  CHECK_FALSE(cfg.reranker.has_value());
  CHECK(parse_task("uk2eu") == Task::UK2EU);
  CHECK(task_tags(Task::EU2UK).first == CollectionTag::EU);
}

TEST_CASE("minimal BM25 pipeline writes its artifacts" * doctest::test_suite("experiment")) {
  TempDir dir;
  synthetic::write_toy_dataset(synthetic::make_toy_dataset(), dir.path());
  write_config(dir / "bm25.cfg", kBm25Only);
  auto cfg = ExperimentConfig::load(dir / "bm25.cfg");
  auto manifest = run_experiment(cfg);
  const auto out = dir / "out";
  for (const char* f : {"prefetch_test.run", "eval_prefetch_test.csv", "eval_prefetch_dev.csv", "rk_curve.csv",
                        "manifest.json", "summary.txt", "dataset_stats.json"})
    CHECK(std::filesystem::exists(out / f));
  CHECK(manifest.hash.size() == 64);
  CHECK(manifest.outputs.count("eval_prefetch_test.csv") == 1);
  CHECK(manifest.outputs.at("eval_prefetch_test.csv") == sha256_file(out / "eval_prefetch_test.csv"));

  auto loaded = RunManifest::load(out / "manifest.json");
  CHECK(loaded.hash == manifest.hash);
  CHECK(loaded.outputs == manifest.outputs);

  std::ifstream curve(out / "rk_curve.csv");
  std::string line, last;
  int rows = 0;
  std::getline(curve, line);
  CHECK(line == "# manifest " + manifest.hash);
  while (std::getline(curve, line))
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++rows, last = line;
  CHECK(rows == 10);

  auto again = run_experiment(cfg);
  CHECK(again.hash == manifest.hash);
  CHECK(again.outputs == manifest.outputs);
  bool any_cached = false;
  for (const auto& t : again.timings) any_cached = any_cached || t.cached;
  CHECK(any_cached);
}

TEST_CASE("missing resources fail in a named stage" * doctest::test_suite("experiment")) {
  TempDir dir;
  synthetic::write_toy_dataset(synthetic::make_toy_dataset(), dir.path());
  write_config(dir / "bad.cfg", std::string(kBm25Only) + "data.qrels=nowhere.tsv\n");
  CHECK_THROWS(run_experiment(ExperimentConfig::load(dir / "bad.cfg")));
  std::filesystem::remove(dir / "pool.jsonl");
  std::ofstream(dir / "pool.jsonl") << "{broken\n";
  write_config(dir / "broken.cfg", kBm25Only);
  try {
    run_experiment(ExperimentConfig::load(dir / "broken.cfg"));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
  }
}

TEST_CASE("recall curve file ends at R@k_max" * doctest::test_suite("experiment")) {
  TempDir dir;
  RunFile run;
  RankedList l{"q", {}};
  for (int i = 0; i < 10; ++i) l.entries.push_back({"d" + std::to_string(i), 10.0 - i, "t"});
  run.emplace("q", l);
  Qrels qrels({{"q", {"d3", "d9"}}});
  emit_rk_curve(run, qrels, {"q"}, 10, dir / "curve.csv", "h");
  std::ifstream in(dir / "curve.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 12);
  CHECK(lines[0] == "# manifest h");
  CHECK(lines[1] == "k,recall");
  CHECK(lines.back().rfind("10,1", 0) == 0);
}

TEST_CASE("toy dataset is reproducible" * doctest::test_suite("experiment")) {
  TempDir a, b;
  synthetic::write_toy_dataset(synthetic::make_toy_dataset(), a.path());
  synthetic::write_toy_dataset(synthetic::make_toy_dataset(), b.path());
  for (const char* f : {"pool.jsonl", "queries.jsonl", "qrels.tsv", "splits.json", "word_vectors.txt"})
    CHECK(sha256_file(a / f) == sha256_file(b / f));
  synthetic::ToyOptions other;
  other.seed = 99;
  TempDir c;
  synthetic::write_toy_dataset(synthetic::make_toy_dataset(other), c.path());
  CHECK(sha256_file(a / "pool.jsonl") != sha256_file(c / "pool.jsonl"));
  CHECK(synthetic::pseudo_word(0) != synthetic::pseudo_word(1));
}
