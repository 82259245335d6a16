#include "unit.hpp"

#include <random>

#include "planted_world.hpp"
#include "regir/neural/reranker.hpp"
#include "test_support.hpp"

using namespace regir;
using namespace regir::neural;
using regir::testing::PlantedWorld;

namespace {

Hyperparams tiny(ModelKind kind) {
  Hyperparams hp;
  hp.bins = 6;
  hp.hidden = 3;
  hp.kmax = 2;
  hp.kernel_sizes = {2, 3};
  hp.filters = 3;
  hp.lq_max = 8;
  hp.ld_max = 12;
  (void)kind;
  return hp;
}

std::vector<std::string> ids(const RankedList& l) {
  std::vector<std::string> out;
  for (const auto& e : l.entries) out.push_back(e.doc_id);
  return out;
}

}  // namespace

TEST_CASE("relevance and hinge arithmetic" * doctest::test_suite("reranker")) {
  CHECK_NEAR(rel_score(0.1, 0.5, 1.0, 4.2), 2.2, 1e-12);
  CHECK(hinge_loss(1.5, 0.5) == 0.0);
  CHECK(hinge_loss(0.7, 0.7) == 1.0);
  CHECK_NEAR(hinge_loss(0.2, 0.9), 1.7, 1e-12);
  CHECK(hinge_loss(5.0, 0.0) == 0.0);
  CHECK(hinge_loss(0.0, 0.0) > 0.0);
}

TEST_CASE("model kind parsing" * doctest::test_suite("reranker")) {
  CHECK(parse_model_kind("drmm") == ModelKind::Drmm);
  CHECK(parse_model_kind("PACRR") == ModelKind::Pacrr);
  CHECK(to_string(ModelKind::Pacrr) == "pacrr");
  CHECK_THROWS(parse_model_kind("bert"));
}

TEST_CASE("hyperparameter files" * doctest::test_suite("reranker")) {
  auto hp = Hyperparams::from_kv(KvConfig::parse("lr=0.01\nB=12\nkernel_sizes=1,2,3\nseed=9\n"));
  CHECK(hp.lr == 0.01);
  CHECK(hp.bins == 12);
  CHECK(hp.kernel_sizes == std::vector<int>{1, 2, 3});
  CHECK(hp.seed == 9);
  CHECK(hp.batch == 32);
  CHECK_THROWS(Hyperparams::from_kv(KvConfig::parse("learning_rate=0.1\n")));
  CHECK_THROWS(Hyperparams::from_kv(KvConfig::parse("batch=0\n")));
  CHECK_THROWS(Hyperparams::from_kv(KvConfig::parse("lr=-1\n")));
  auto back = Hyperparams::from_kv(hp.to_kv());
  CHECK(back.to_kv().dump() == hp.to_kv().dump());
}

TEST_CASE("fusion weights sit at the end of the parameter vector" * doctest::test_suite("reranker")) {
  for (auto kind : {ModelKind::Drmm, ModelKind::Pacrr}) {
    NeuralReranker m(kind, tiny(kind));
    m.initialize(3);
    CHECK(m.num_params() == m.model_param_count() + 2);
    CHECK(m.w_r() == 1.0);
    CHECK(m.w_p() == 1.0);
    m.set_fusion_weights(0.0, 2.0);
    CHECK(m.params()[m.w_r_index()] == 0.0);
    CHECK(m.params().back() == 2.0);

    NeuralReranker again(kind, tiny(kind));
    again.initialize(3);
    NeuralReranker other(kind, tiny(kind));
    other.initialize(4);
    CHECK(again.params() != other.params());
  }
}

TEST_CASE("checkpoints round-trip exactly" * doctest::test_suite("reranker")) {
  regir::testing::TempDir dir;
  for (auto kind : {ModelKind::Drmm, ModelKind::Pacrr}) {
    NeuralReranker m(kind, tiny(kind));
    m.initialize(17);
    m.set_fusion_weights(0.25, 3.5);
    m.save(dir / "m.ckpt");
    auto back = NeuralReranker::load(dir / "m.ckpt");
    CHECK(back.kind() == kind);
    CHECK(back.params() == m.params());
    CHECK(back.hyperparams().to_kv().dump() == m.hyperparams().to_kv().dump());
    CHECK(back.serialize() == m.serialize());
  }
  CHECK_THROWS(NeuralReranker::deserialize("REGIRCKPgarbage"));
  CHECK_THROWS(NeuralReranker::deserialize(""));
}

TEST_CASE("triple loss gradient includes the fusion weights" * doctest::test_suite("reranker")) {
  PlantedWorld world(PlantedWorld::small());
  for (auto kind : {ModelKind::Drmm, ModelKind::Pacrr}) {
    NeuralReranker m(kind, tiny(kind));
    m.initialize(5);
    PairFeaturizer feat(world.resources(), m);
    const auto& qid = world.corpus.train[0];
    const auto pos = *world.corpus.qrels.relevant(qid).begin();
    const auto& list = world.corpus.lists.at(qid);
    const auto neg = list.entries[0].doc_id == pos ? list.entries[1].doc_id : list.entries[0].doc_id;
    auto fp = feat.features(qid, pos);
    auto fn = feat.features(qid, neg);
    // push the margin into the active region of the hinge
    std::vector<double> p = m.params();
    p[m.w_p_index()] = 0.3;
    const double sp_pos = 0.2, sp_neg = 0.9;
    std::vector<double> grad(p.size(), 0.0);
    const double loss = m.triple_loss(p, *fp, sp_pos, *fn, sp_neg, grad);
    REQUIRE(loss > 0.05);
    auto check = regir::testing::finite_difference_check(
        [&](const std::vector<double>& q) { return m.triple_loss(q, *fp, sp_pos, *fn, sp_neg); }, p, grad);
    INFO(to_string(kind) << " worst parameter " << check.worst_index);
    CHECK(check.max_rel_error < 1e-4);
    CHECK_NEAR(grad[m.w_p_index()], sp_neg - sp_pos, 1e-12);
    CHECK_NEAR(grad[m.w_r_index()], m.neural_score(p, *fn) - m.neural_score(p, *fp), 1e-12);
  }
}

TEST_CASE("margin met gives zero loss and zero gradient" * doctest::test_suite("reranker")) {
  NeuralReranker m(ModelKind::Drmm, tiny(ModelKind::Drmm));
  m.initialize(1);
  m.set_fusion_weights(0.0, 10.0);
  PairFeatures empty;
  std::vector<double> grad(m.num_params(), 0.0);
  CHECK(m.triple_loss(m.params(), empty, 1.0, empty, 0.0, grad) == 0.0);
  for (double g : grad) CHECK(g == 0.0);
  CHECK(m.neural_score(empty) == 0.0);
}

TEST_CASE("reranking with zero neural weight keeps the pre-fetch order" * doctest::test_suite("reranker")) {
  PlantedWorld world(PlantedWorld::small());
  for (auto kind : {ModelKind::Drmm, ModelKind::Pacrr}) {
    NeuralReranker m(kind, tiny(kind));
    m.initialize(2);
    m.set_fusion_weights(0.0, 1.0);
    PairFeaturizer feat(world.resources(), m);
    for (const auto& [qid, list] : world.corpus.lists) {
      auto out = rerank(m, feat, list);
      CHECK(ids(out) == ids(list));
      CHECK(out.entries.front().stage == to_string(kind));
      CHECK(is_well_formed(out));
    }
  }
}

TEST_CASE("reranking with zero pre-fetch weight follows the neural score" * doctest::test_suite("reranker")) {
  PlantedWorld world(PlantedWorld::small());
  NeuralReranker m(ModelKind::Drmm, tiny(ModelKind::Drmm));
  m.initialize(6);
  m.set_fusion_weights(1.0, 0.0);
  PairFeaturizer feat(world.resources(), m);
  const auto& [qid, list] = *world.corpus.lists.begin();
  auto out = rerank(m, feat, list);
  std::vector<std::pair<std::string, double>> expected;
  for (const auto& e : list.entries) expected.emplace_back(e.doc_id, m.neural_score(*feat.features(qid, e.doc_id)));
  std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(out.entries[i].doc_id == expected[i].first);
}

TEST_CASE("a model that rewards the exact match puts positives first" * doctest::test_suite("reranker")) {
  PlantedWorld world(PlantedWorld::small());
  auto hp = tiny(ModelKind::Drmm);
  NeuralReranker m(ModelKind::Drmm, hp);
  std::fill(m.params().begin(), m.params().end(), 0.0);
  const int width = hp.bins + 1;
  m.params()[static_cast<std::size_t>(width - 1)] = 5.0;  // hidden unit 0 reads the exact-match bin
  m.params()[static_cast<std::size_t>(hp.hidden * width + hp.hidden)] = 10.0;  // w2[0]
  m.params()[static_cast<std::size_t>(hp.hidden * width + 2 * hp.hidden)] = 50.0;  // gate scale favours the rare term
  m.set_fusion_weights(1.0, 0.0);
  PairFeaturizer feat(world.resources(), m);
  for (const auto& [qid, list] : world.corpus.lists) {
    auto out = rerank(m, feat, list);
    CHECK(world.corpus.qrels.relevant(qid).count(out.entries.front().doc_id) == 1);
  }
}

TEST_CASE("featurizer caches and rejects unknown ids" * doctest::test_suite("reranker")) {
  PlantedWorld world(PlantedWorld::small());
  NeuralReranker m(ModelKind::Pacrr, tiny(ModelKind::Pacrr));
  m.initialize(0);
  PairFeaturizer feat(world.resources(), m);
  const auto& qid = world.corpus.train[0];
  const auto doc = world.corpus.lists.at(qid).entries.front().doc_id;
  auto a = feat.features(qid, doc);
  auto b = feat.features(qid, doc);
  CHECK(a.get() == b.get());
  CHECK_THROWS(feat.features("nope", doc));
  CHECK_THROWS(feat.features(qid, "nope"));

  PairFeaturizer tiny_cache(world.resources(), m, 1);
  auto c = tiny_cache.features(qid, doc);
  CHECK(m.neural_score(*c) == m.neural_score(*a));
}
