#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/neural/reranker.hpp"
#include "regir/ranked_list.hpp"

namespace regir::neural {

struct TrainTriple {
  std::string query_id;
  std::string pos_doc_id;
  std::string neg_doc_id;

  bool operator==(const TrainTriple&) const = default;
};

struct TripleSample {
  std::vector<TrainTriple> triples;
  std::size_t skipped_positives = 0;         // relevant docs missing from the pre-fetched list
  std::vector<std::string> skipped_queries;  // no relevant doc in the pre-fetched list
};

/// For every relevant document found in a query's pre-fetched list, draws
/// `negatives` non-relevant documents from the same list without replacement
/// (fewer if the list has fewer). Deterministic for a given seed.
TripleSample sample_triples(const std::vector<std::string>& query_ids, const Qrels& qrels, const RunFile& prefetched,
                            int negatives, std::uint64_t seed);

/// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  double lr_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_r20 = 0.0;
  double w_r = 0.0;
  double w_p = 0.0;
};

/// `epoch,train_loss,dev_r20,w_r,w_p`
void write_training_log(const std::vector<EpochLog>& log, std::ostream& out, const std::string& manifest_hash = {});

/// Thrown when the training loss becomes NaN or infinite.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

struct TrainData {
  const std::vector<TrainTriple>* triples = nullptr;
  const RunFile* train_lists = nullptr;  // source of s_p for triple documents
  const RunFile* dev_lists = nullptr;
  const std::vector<std::string>* dev_query_ids = nullptr;
  const Qrels* qrels = nullptr;
};

struct TrainResult {
  NeuralReranker model;  // best-dev parameters
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_r20 = 0.0;
};

/// Minimizes the mean triple hinge loss with Adam on shuffled mini-batches.
/// After each epoch the dev lists are re-ranked; training stops after
/// `patience` epochs without a better dev R@20 (ties broken by lower training
/// loss) and the best epoch's parameters are returned. Single-threaded
/// optimization; dev scoring is parallel but order-independent.
TrainResult train(const NeuralReranker& initial, PairFeaturizer& featurizer, const TrainData& data,
                  const Hyperparams& hp);

}  // namespace regir::neural
