#include "regir/neural/trainer.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <iomanip>
#include <numeric>
#include <unordered_map>

#include "regir/eval.hpp"
#include "regir/fusion.hpp"

namespace regir::neural {

TripleSample sample_triples(const std::vector<std::string>& query_ids, const Qrels& qrels, const RunFile& prefetched,
                            int negatives, std::uint64_t seed) {
  if (negatives < 1) throw Error("sample_triples: negatives must be >= 1");
  TripleSample out;
  Rng rng(derive_seed(seed, "triples"));
  for (const auto& qid : query_ids) {
    auto it = prefetched.find(qid);
    if (it == prefetched.end()) throw Error("sample_triples: no pre-fetched list for query '" + qid + "'");
    const auto& relevant = qrels.relevant(qid);
    std::vector<std::string> pos, neg;
    for (const auto& e : it->second.entries) (relevant.count(e.doc_id) ? pos : neg).push_back(e.doc_id);
    out.skipped_positives += relevant.size() - pos.size();
    if (pos.empty()) {
      if (!relevant.empty()) spdlog::warn("query '{}': no relevant document in the pre-fetched list, skipped", qid);
      out.skipped_queries.push_back(qid);
      continue;
    }
    for (const auto& p : pos) {
      // partial Fisher-Yates over a copy of the negative pool
      auto pool = neg;
      const auto draw = std::min<std::size_t>(static_cast<std::size_t>(negatives), pool.size());
      for (std::size_t i = 0; i < draw; ++i) {
        const auto j = i + uniform_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
        out.triples.push_back({qid, p, pool[i]});
      }
    }
  }
  return out;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

void write_training_log(const std::vector<EpochLog>& log, std::ostream& out, const std::string& manifest_hash) {
  if (!manifest_hash.empty()) out << "# manifest " << manifest_hash << '\n';
  out << "epoch,train_loss,dev_r20,w_r,w_p\n";
  for (const auto& e : log)
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.dev_r20) << ','
        << format_double(e.w_r) << ',' << format_double(e.w_p) << '\n';
}

TrainResult train(const NeuralReranker& initial, PairFeaturizer& featurizer, const TrainData& data,
                  const Hyperparams& hp) {
  if (!data.triples || !data.train_lists || !data.dev_lists || !data.dev_query_ids || !data.qrels)
    throw Error("train: incomplete training data");
  if (data.triples->empty()) throw Error("train: no training triples");
  hp.validate();

  // normalized pre-fetch score of every (query, doc) in the training lists
  std::unordered_map<std::string, std::unordered_map<std::string, double>> s_p;
  for (const auto& [qid, list] : *data.train_lists) {
    auto& m = s_p[qid];
    for (const auto& e : normalize_scores(list).entries) m[e.doc_id] = e.score;
  }
  auto prefetch_score = [&](const std::string& qid, const std::string& doc) {
    auto q = s_p.find(qid);
    if (q == s_p.end()) throw Error("train: no pre-fetched list for query '" + qid + "'");
    auto d = q->second.find(doc);
    if (d == q->second.end()) throw Error("train: document '" + doc + "' not in the list of '" + qid + "'");
    return d->second;
  };

  RunFile dev_lists;
  for (const auto& qid : *data.dev_query_ids) {
    auto it = data.dev_lists->find(qid);
    if (it != data.dev_lists->end()) dev_lists.emplace(qid, it->second);
  }
  auto dev_r20 = [&](const NeuralReranker& model) {
    return mean_recall_at_k(rerank_run(model, featurizer, dev_lists), *data.qrels, *data.dev_query_ids, 20);
  };

  NeuralReranker model = initial;
  TrainResult result{initial, {}, 0, 0.0};
  Adam adam(model.num_params(), hp.lr);
  Rng rng(derive_seed(hp.seed, "shuffle"));
  std::vector<std::size_t> order(data.triples->size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.num_params());
  std::vector<double> triple_loss(order.size());

  double best_loss = std::numeric_limits<double>::infinity();
  result.best_dev_r20 = -1.0;
  int since_best = 0;
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(hp.batch));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& t = (*data.triples)[order[b]];
        auto pos = featurizer.features(t.query_id, t.pos_doc_id);
        auto neg = featurizer.features(t.query_id, t.neg_doc_id);
        const double l = model.triple_loss(model.params(), *pos, prefetch_score(t.query_id, t.pos_doc_id), *neg,
                                           prefetch_score(t.query_id, t.neg_doc_id), grad);
        triple_loss[order[b]] = l;
        batch_loss += l;
      }
      if (!std::isfinite(batch_loss))
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ", batch starting at " +
                               std::to_string(start) + ": loss " + format_double(batch_loss) + ", w_r " +
                               format_double(model.w_r()) + ", w_p " + format_double(model.w_p()));
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& g : grad) g *= scale;
      adam.step(model.params(), grad);
    }
    for (double l : triple_loss) epoch_loss += l;
    epoch_loss /= static_cast<double>(order.size());
    const double r20 = dev_r20(model);
    result.log.push_back({epoch, epoch_loss, r20, model.w_r(), model.w_p()});
    spdlog::debug("epoch {} loss {:.6f} dev R@20 {:.4f} w_r {:.4f} w_p {:.4f}", epoch, epoch_loss, r20, model.w_r(),
                  model.w_p());
    if (r20 > result.best_dev_r20 || (r20 == result.best_dev_r20 && epoch_loss < best_loss)) {
      result.best_dev_r20 = r20;
      best_loss = epoch_loss;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= hp.patience) {
      break;
    }
  }
  return result;
}

}  // namespace regir::neural
