#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "regir/neural/embedding.hpp"
#include "regir/util.hpp"

namespace regir::neural {

/// Row-wise k-max pooling: the k largest values of each row in descending
/// order, zero-filled when a row has fewer than k columns. `argmax` (optional)
/// receives the source column of every kept value, -1 for fill.
Eigen::MatrixXd kmax_rows(const Eigen::MatrixXd& m, int k, Eigen::MatrixXi* argmax = nullptr);

struct PacrrFeatures {
  Eigen::MatrixXd sim;          // truncated query x document similarity matrix
  Eigen::VectorXd idf_softmax;  // softmax over the idf of the retained query terms
};

/// Similarity-matrix re-ranker: n x n convolutions over S for every kernel
/// size, max over filters, row-wise k-max; each query row becomes
///   [kmax(S), kmax(conv_n(S)) for n in sizes, softmax(idf)]
/// and a one-unit LSTM reads the rows in query order. The last hidden state is
/// the score.
class PacrrArchitecture {
 public:
  struct Config {
    int kmax = 2;
    std::vector<int> kernel_sizes{2, 3};
    int filters = 16;
    int lq_max = 256;
    int ld_max = 1024;
  };

  explicit PacrrArchitecture(Config cfg);

  const Config& config() const { return cfg_; }
  /// Row width of the recurrent input.
  int row_width() const { return (1 + static_cast<int>(cfg_.kernel_sizes.size())) * cfg_.kmax + 1; }
  std::size_t num_params() const { return lstm_offset_ + 4 * static_cast<std::size_t>(row_width() + 2); }
  void initialize(std::span<double> params, Rng& rng) const;

  /// Throws on an empty query or document.
  PacrrFeatures featurize(const TokenMatrix& query, std::span<const double> query_idf, const TokenMatrix& doc) const;

  struct Cache {
    Eigen::MatrixXd rows;                // S_sim, one row per query term
    std::vector<Eigen::MatrixXi> conv_argmax;  // per size: source column of each k-max value
    std::vector<Eigen::MatrixXi> conv_filter;  // per size: winning filter at that position
    Eigen::MatrixXd gates;               // T x 4: i, f, o, g after activation
    Eigen::VectorXd cells;               // c_t
    Eigen::VectorXd hidden;              // h_t
    double score = 0.0;
  };

  double forward(std::span<const double> params, const PacrrFeatures& x, Cache* cache = nullptr) const;
  void backward(std::span<const double> params, const PacrrFeatures& x, const Cache& cache, double d_score,
                std::span<double> grad) const;

  /// Layout: per kernel size n, F filters of n*n row-major weights then F
  /// biases; then for each LSTM gate (i, f, o, g) row_width input weights, the
  /// recurrent weight and the bias.
  std::size_t conv_weight_offset(std::size_t size_index) const { return conv_offsets_[size_index]; }
  std::size_t conv_bias_offset(std::size_t size_index) const;
  std::size_t lstm_offset() const { return lstm_offset_; }
  std::size_t gate_offset(int gate) const { return lstm_offset_ + static_cast<std::size_t>(gate * (row_width() + 2)); }

  /// Convolution response at (i, j) for filter f of kernel size index s
  /// ('same' padding with offset (n - 1) / 2, zeros outside S).
  double conv_at(std::span<const double> params, std::size_t s, int f, const Eigen::MatrixXd& sim, Eigen::Index i,
                 Eigen::Index j) const;

 private:
  Config cfg_;
  std::vector<std::size_t> conv_offsets_;
  std::size_t lstm_offset_ = 0;
};

}  // namespace regir::neural
