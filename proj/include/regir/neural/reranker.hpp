#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/kv_config.hpp"
#include "regir/neural/drmm.hpp"
#include "regir/neural/embedding.hpp"
#include "regir/neural/pacrr.hpp"
#include "regir/ranked_list.hpp"
#include "regir/text.hpp"

namespace regir::neural {

enum class ModelKind { Drmm, Pacrr };

ModelKind parse_model_kind(std::string_view s);
std::string_view to_string(ModelKind kind);

struct Hyperparams {
  double lr = 1e-3;
  int batch = 32;
  int patience = 5;
  int max_epochs = 100;
  int bins = 30;
  int hidden = 5;
  int kmax = 2;
  std::vector<int> kernel_sizes{2, 3};
  int filters = 16;
  int negatives = 4;
  std::uint64_t seed = 0;
  int lq_max = 256;
  int ld_max = 1024;

  void validate() const;
  /// Unknown keys are rejected. `B` is accepted for `bins`.
  static Hyperparams from_kv(const KvConfig& kv);
  static Hyperparams load(const std::filesystem::path& path);
  KvConfig to_kv() const;
};

/// Features of one (query, document) pair. `empty` marks documents with no
/// embeddable token; their neural score is 0.
struct PairFeatures {
  std::variant<std::monostate, DrmmFeatures, PacrrFeatures> x;
  bool empty() const { return std::holds_alternative<std::monostate>(x); }
};

/// rel = w_r * s_r + w_p * s_p
inline double rel_score(double s_r, double s_p, double w_r, double w_p) { return w_r * s_r + w_p * s_p; }
/// max(0, 1 - rel_pos + rel_neg)
inline double hinge_loss(double rel_pos, double rel_neg) {
  const double v = 1.0 - rel_pos + rel_neg;
  return v > 0.0 ? v : 0.0;
}

/// A DRMM or PACRR scorer plus the fusion weights. All trainable values live
/// in one flat vector; w_r and w_p are its last two entries.
class NeuralReranker {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  NeuralReranker(ModelKind kind, Hyperparams hp);

  ModelKind kind() const { return kind_; }
  const Hyperparams& hyperparams() const { return hp_; }

  std::size_t num_params() const { return params_.size(); }
  std::size_t model_param_count() const { return params_.size() - 2; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t w_r_index() const { return params_.size() - 2; }
  std::size_t w_p_index() const { return params_.size() - 1; }
  double w_r() const { return params_[w_r_index()]; }
  double w_p() const { return params_[w_p_index()]; }
  void set_fusion_weights(double w_r, double w_p);

  /// Random model weights from `seed`; w_r = w_p = 1.
  void initialize(std::uint64_t seed);

  /// Query tokens (with per-token idf) against document tokens.
  PairFeatures featurize(const TokenMatrix& query, std::span<const double> query_idf, const TokenMatrix& doc) const;

  /// Neural score s_r under the given flat parameters (defaults to own).
  double neural_score(std::span<const double> params, const PairFeatures& x) const;
  double neural_score(const PairFeatures& x) const { return neural_score(params_, x); }
  /// Adds d_score * ds_r/dparams to grad (model part only); returns s_r.
  double neural_grad(std::span<const double> params, const PairFeatures& x, double d_score, std::span<double> grad) const;

  double rel(std::span<const double> params, const PairFeatures& x, double s_p) const;
  double rel(const PairFeatures& x, double s_p) const { return rel(params_, x, s_p); }

  /// Hinge loss of one triple; adds its gradient to grad when non-null.
  double triple_loss(std::span<const double> params, const PairFeatures& pos, double pos_sp, const PairFeatures& neg,
                     double neg_sp, std::span<double> grad = {}) const;

  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static NeuralReranker load(const std::filesystem::path& path);
  static NeuralReranker deserialize(std::string_view bytes);

 private:
  ModelKind kind_;
  Hyperparams hp_;
  std::optional<DrmmArchitecture> drmm_;
  std::optional<PacrrArchitecture> pacrr_;
  std::vector<double> params_;
};

/// Turns (query id, doc id) into model inputs: text -> pipeline -> embeddings,
/// with the pool-side idf table. Pair features are cached up to a byte budget.
/// Thread-safe.
class PairFeaturizer {
 public:
  struct Resources {
    const Collection* queries = nullptr;
    const Collection* pool = nullptr;
    const TextPipeline* pipeline = nullptr;
    const TokenEmbedder* query_embedder = nullptr;
    const TokenEmbedder* doc_embedder = nullptr;
  };

  PairFeaturizer(Resources res, const NeuralReranker& model, std::size_t cache_bytes = std::size_t{1} << 30);

  std::shared_ptr<const PairFeatures> features(const std::string& query_id, const std::string& doc_id);
  /// Embedded query with per-term idf.
  std::pair<TokenMatrix, std::vector<double>> query_input(const std::string& query_id);
  TokenMatrix doc_input(const std::string& doc_id);

 private:
  Resources res_;
  const NeuralReranker* model_;
  std::size_t budget_;
  std::size_t used_ = 0;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<const PairFeatures>> cache_;
  std::map<std::string, std::shared_ptr<const std::pair<TokenMatrix, std::vector<double>>>> query_cache_;
};

/// Re-orders a pre-fetched list by rel. Pre-fetch scores are min-max
/// normalized first; ties keep the pre-fetch order. Scoring is parallel.
RankedList rerank(const NeuralReranker& model, PairFeaturizer& featurizer, const RankedList& prefetched);
RunFile rerank_run(const NeuralReranker& model, PairFeaturizer& featurizer, const RunFile& prefetched);

}  // namespace regir::neural
