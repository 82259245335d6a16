#include "unit.hpp"

#include <cmath>
#include <sstream>

#include "planted_world.hpp"
#include "regir/eval.hpp"
#include "regir/neural/trainer.hpp"

using namespace regir;
using namespace regir::neural;
using regir::testing::PlantedWorld;

namespace {

RankedList ranked(const std::vector<std::string>& ids, const std::string& qid) {
  RankedList l{qid, {}};
  double s = static_cast<double>(ids.size());
  for (const auto& d : ids) l.entries.push_back({d, s--, "t"});
  return l;
}

Hyperparams small_hp() {
  Hyperparams hp;
  hp.lr = 0.01;
  hp.batch = 4;
  hp.patience = 50;
  hp.max_epochs = 4;
  hp.bins = 6;
  hp.hidden = 3;
  hp.negatives = 3;
  hp.seed = 12;
  return hp;
}

}  // namespace

TEST_CASE("triple sampling" * doctest::test_suite("trainer")) {
  RunFile run;
  run.emplace("q1", ranked({"n1", "p", "n2", "n3"}, "q1"));
  run.emplace("q2", ranked({"a", "b"}, "q2"));
  run.emplace("q3", ranked({"x", "y"}, "q3"));
  run.emplace("q4", ranked({"n"}, "q4"));
  Qrels qrels({{"q1", {"p", "missing"}}, {"q2", {"a", "b"}}, {"q3", {"zz"}}});

  auto s = sample_triples({"q1", "q2", "q3", "q4"}, qrels, run, 2, 7);
  CHECK(s.triples.size() == 2);
  for (const auto& t : s.triples) {
    CHECK(t.query_id == "q1");
    CHECK(t.pos_doc_id == "p");
    CHECK(t.neg_doc_id != "p");
  }
  CHECK(s.triples[0].neg_doc_id != s.triples[1].neg_doc_id);
  CHECK(s.skipped_positives == 1 + 1);
  CHECK(s.skipped_queries == std::vector<std::string>{"q3", "q4"});

  CHECK(sample_triples({"q1"}, qrels, run, 2, 7).triples == sample_triples({"q1"}, qrels, run, 2, 7).triples);
  CHECK(sample_triples({"q1"}, qrels, run, 10, 7).triples.size() == 3);
  CHECK_THROWS(sample_triples({"q9"}, qrels, run, 2, 7));
  CHECK_THROWS(sample_triples({"q1"}, qrels, run, 0, 7));
}

TEST_CASE("adam first step moves each weight by the learning rate" * doctest::test_suite("trainer")) {
  Adam adam(3, 0.1);
  std::vector<double> p{1.0, 2.0, 3.0};
  adam.step(p, {0.5, -2.0, 0.0});
  CHECK_NEAR(p[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  CHECK_NEAR(p[1], 2.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
  CHECK(p[2] == 3.0);

  // second step with the same gradient: bias-corrected moments equal the gradient again
  adam.step(p, {0.5, -2.0, 0.0});
  CHECK_NEAR(p[0], 1.0 - 2.0 * 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
}

TEST_CASE("training log format" * doctest::test_suite("trainer")) {
  std::ostringstream out;
  write_training_log({{1, 0.5, 0.25, 1.0, 2.0}}, out, "abc");
  CHECK(out.str() == "# manifest abc\nepoch,train_loss,dev_r20,w_r,w_p\n1,0.5,0.25,1,2\n");
}

TEST_CASE("zero learning rate leaves weights and loss unchanged" * doctest::test_suite("trainer")) {
  PlantedWorld world(PlantedWorld::small());
  auto hp = small_hp();
  hp.lr = 0.0;
  NeuralReranker init(ModelKind::Drmm, hp);
  init.initialize(hp.seed);
  PairFeaturizer feat(world.resources(), init);
  auto sample = sample_triples(world.corpus.train, world.corpus.qrels, world.corpus.lists, hp.negatives, hp.seed);
  TrainData data{&sample.triples, &world.corpus.lists, &world.corpus.lists, &world.corpus.dev, &world.corpus.qrels};
  auto res = train(init, feat, data, hp);
  CHECK(res.model.params() == init.params());
  REQUIRE(res.log.size() == 4);
  for (const auto& e : res.log) CHECK(e.train_loss == res.log[0].train_loss);
}

TEST_CASE("training is deterministic and lowers the loss" * doctest::test_suite("trainer")) {
  PlantedWorld world(PlantedWorld::small());
  auto hp = small_hp();
  hp.max_epochs = 8;
  for (auto kind : {ModelKind::Drmm, ModelKind::Pacrr}) {
    auto h = hp;
    h.filters = 3;
    h.kernel_sizes = {2};
    NeuralReranker init(kind, h);
    init.initialize(h.seed);
    PairFeaturizer feat(world.resources(), init);
    auto sample = sample_triples(world.corpus.train, world.corpus.qrels, world.corpus.lists, h.negatives, h.seed);
    TrainData data{&sample.triples, &world.corpus.lists, &world.corpus.lists, &world.corpus.dev, &world.corpus.qrels};
    auto a = train(init, feat, data, h);
    auto b = train(init, feat, data, h);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.model.params() == b.model.params());
    CHECK(a.log.back().train_loss < a.log.front().train_loss);
    CHECK(a.best_epoch >= 1);
    CHECK(a.best_dev_r20 == a.log[static_cast<std::size_t>(a.best_epoch - 1)].dev_r20);
  }
}

TEST_CASE("early stopping honours patience" * doctest::test_suite("trainer")) {
  PlantedWorld world(PlantedWorld::small());
  auto hp = small_hp();
  hp.lr = 0.0;
  hp.patience = 2;
  hp.max_epochs = 20;
  NeuralReranker init(ModelKind::Drmm, hp);
  init.initialize(1);
  PairFeaturizer feat(world.resources(), init);
  auto sample = sample_triples(world.corpus.train, world.corpus.qrels, world.corpus.lists, hp.negatives, hp.seed);
  TrainData data{&sample.triples, &world.corpus.lists, &world.corpus.lists, &world.corpus.dev, &world.corpus.qrels};
  auto res = train(init, feat, data, hp);
  CHECK(res.log.size() == 3);
  CHECK(res.best_epoch == 1);

  TrainData broken = data;
  broken.triples = nullptr;
  CHECK_THROWS(train(init, feat, broken, hp));
}
