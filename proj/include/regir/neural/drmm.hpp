#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>

#include "regir/dense.hpp"
#include "regir/neural/embedding.hpp"
#include "regir/text.hpp"
#include "regir/util.hpp"

namespace regir::neural {

/// Log-count histogram of one row of similarities: `bins` equal-width bins
/// over [-1, 1) followed by one bin reserved for exact matches (sim >= 1).
/// Returns bins + 1 entries holding log(1 + count).
Eigen::VectorXd similarity_histogram(const Eigen::Ref<const Eigen::RowVectorXd>& sims, int bins);
/// Raw counts (before the log), same layout.
Eigen::VectorXd similarity_counts(const Eigen::Ref<const Eigen::RowVectorXd>& sims, int bins);

/// Histogram of a query term against every in-vocabulary document token; an
/// out-of-vocabulary query term yields an all-zero histogram.
Eigen::VectorXd build_histogram(const std::string& query_term, const TokenList& doc_tokens, const WordVectors& vectors,
                                int bins);

/// Inputs of one (query, document) pair.
struct DrmmFeatures {
  Eigen::MatrixXd histograms;  // one row per distinct retained query term
  Eigen::VectorXd idf;         // idf of each of those terms
};

/// Per-term histograms fed to a tanh MLP; per-term outputs are combined with a
/// softmax gate over `gate_scale * idf(term)`:
///   s_r = sum_i softmax(g * idf)_i * (w2 . tanh(W1 h_i + b1))
/// Parameters are a flat vector: W1 (hidden x width, row-major), b1, w2, g.
class DrmmArchitecture {
 public:
  struct Config {
    int bins = 30;
    int hidden = 5;
  };

  explicit DrmmArchitecture(Config cfg);

  const Config& config() const { return cfg_; }
  /// Histogram width (bins + 1).
  int width() const { return cfg_.bins + 1; }
  std::size_t num_params() const;
  void initialize(std::span<double> params, Rng& rng) const;

  /// Query terms are de-duplicated before histogramming. Throws if the query
  /// has no retained term.
  DrmmFeatures featurize(const TokenMatrix& query, std::span<const double> query_idf, const TokenMatrix& doc) const;

  struct Cache {
    Eigen::MatrixXd activations;  // rows = terms, cols = hidden
    Eigen::VectorXd term_scores;
    Eigen::VectorXd gates;
    double score = 0.0;
  };

  double forward(std::span<const double> params, const DrmmFeatures& x, Cache* cache = nullptr) const;
  /// Accumulates d(score)/d(params) * d_score into grad.
  void backward(std::span<const double> params, const DrmmFeatures& x, const Cache& cache, double d_score,
                std::span<double> grad) const;

  // Offsets into the flat parameter vector.
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(cfg_.hidden * width()); }
  std::size_t w2_offset() const { return b1_offset() + static_cast<std::size_t>(cfg_.hidden); }
  std::size_t gate_offset() const { return w2_offset() + static_cast<std::size_t>(cfg_.hidden); }

 private:
  Config cfg_;
};

}  // namespace regir::neural
