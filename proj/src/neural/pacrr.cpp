#include "regir/neural/pacrr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace regir::neural {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double uniform_symmetric(Rng& rng, double limit) { return (2.0 * uniform_real(rng) - 1.0) * limit; }

TokenMatrix head(const TokenMatrix& m, int n) {
  const auto rows = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(m.size()));
  TokenMatrix out;
  out.terms.assign(m.terms.begin(), m.terms.begin() + rows);
  out.vectors = m.vectors.topRows(rows);
  return out;
}

enum Gate { kInput = 0, kForget = 1, kOutput = 2, kCell = 3 };

}  // namespace

Eigen::MatrixXd kmax_rows(const Eigen::MatrixXd& m, int k, Eigen::MatrixXi* argmax) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), k);
  if (argmax) *argmax = Eigen::MatrixXi::Constant(m.rows(), k, -1);
  std::vector<int> cols(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::iota(cols.begin(), cols.end(), 0);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), cols.size());
    std::partial_sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(take), cols.end(), [&](int a, int b) {
      if (m(i, a) != m(i, b)) return m(i, a) > m(i, b);
      return a < b;
    });
    for (std::size_t r = 0; r < take; ++r) {
      out(i, static_cast<Eigen::Index>(r)) = m(i, cols[r]);
      if (argmax) (*argmax)(i, static_cast<Eigen::Index>(r)) = cols[r];
    }
  }
  return out;
}

PacrrArchitecture::PacrrArchitecture(Config cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kmax < 1) throw Error("PACRR: kmax must be >= 1");
  if (cfg_.filters < 1) throw Error("PACRR: filters must be >= 1");
  if (cfg_.lq_max < 1 || cfg_.ld_max < 1) throw Error("PACRR: lq_max and ld_max must be >= 1");
  if (cfg_.kernel_sizes.empty()) throw Error("PACRR: at least one kernel size required");
  std::size_t offset = 0;
  for (int n : cfg_.kernel_sizes) {
    if (n < 1) throw Error("PACRR: kernel sizes must be >= 1");
    conv_offsets_.push_back(offset);
    offset += static_cast<std::size_t>(cfg_.filters) * static_cast<std::size_t>(n * n + 1);
  }
  lstm_offset_ = offset;
}

std::size_t PacrrArchitecture::conv_bias_offset(std::size_t s) const {
  const auto n = static_cast<std::size_t>(cfg_.kernel_sizes[s]);
  return conv_offsets_[s] + static_cast<std::size_t>(cfg_.filters) * n * n;
}

void PacrrArchitecture::initialize(std::span<double> p, Rng& rng) const {
  for (std::size_t s = 0; s < cfg_.kernel_sizes.size(); ++s) {
    const int n = cfg_.kernel_sizes[s];
    const double limit = std::sqrt(6.0 / (n * n + cfg_.filters));
    for (std::size_t i = conv_offsets_[s]; i < conv_bias_offset(s); ++i) p[i] = uniform_symmetric(rng, limit);
    for (int f = 0; f < cfg_.filters; ++f) p[conv_bias_offset(s) + static_cast<std::size_t>(f)] = 0.0;
  }
  const int d = row_width();
  const double limit = std::sqrt(6.0 / (d + 2));
  for (int g = 0; g < 4; ++g) {
    const auto base = gate_offset(g);
    for (int j = 0; j < d + 1; ++j) p[base + static_cast<std::size_t>(j)] = uniform_symmetric(rng, limit);
    p[base + static_cast<std::size_t>(d + 1)] = g == kForget ? 1.0 : 0.0;
  }
}

PacrrFeatures PacrrArchitecture::featurize(const TokenMatrix& query, std::span<const double> query_idf,
                                           const TokenMatrix& doc) const {
  if (query_idf.size() != query.size()) throw Error("PACRR: query idf / token count mismatch");
  if (query.size() == 0) throw Error("PACRR: empty query after denoising");
  if (doc.size() == 0) throw Error("PACRR: empty document after denoising");
  auto q = head(query, cfg_.lq_max);
  auto d = head(doc, cfg_.ld_max);
  PacrrFeatures x;
  x.sim = similarity_matrix(q, d);
  Eigen::VectorXd idf = Eigen::Map<const Eigen::VectorXd>(query_idf.data(), static_cast<Eigen::Index>(q.size()));
  x.idf_softmax = (idf.array() - idf.maxCoeff()).exp().matrix();
  x.idf_softmax /= x.idf_softmax.sum();
  return x;
}

double PacrrArchitecture::conv_at(std::span<const double> p, std::size_t s, int f, const Eigen::MatrixXd& sim,
                                  Eigen::Index i, Eigen::Index j) const {
  const int n = cfg_.kernel_sizes[s];
  const int off = (n - 1) / 2;
  const double* w = p.data() + conv_offsets_[s] + static_cast<std::size_t>(f * n * n);
  double acc = p[conv_bias_offset(s) + static_cast<std::size_t>(f)];
  for (int a = 0; a < n; ++a) {
    const Eigen::Index r = i + a - off;
    if (r < 0 || r >= sim.rows()) continue;
    for (int c = 0; c < n; ++c) {
      const Eigen::Index col = j + c - off;
      if (col < 0 || col >= sim.cols()) continue;
      acc += w[a * n + c] * sim(r, col);
    }
  }
  return acc;
}

double PacrrArchitecture::forward(std::span<const double> p, const PacrrFeatures& x, Cache* cache) const {
  const Eigen::Index lq = x.sim.rows(), ld = x.sim.cols();
  const int k = cfg_.kmax;
  const int width = row_width();
  Eigen::MatrixXd rows(lq, width);
  rows.leftCols(k) = kmax_rows(x.sim, k);

  std::vector<Eigen::MatrixXi> conv_argmax, conv_filter;
  for (std::size_t s = 0; s < cfg_.kernel_sizes.size(); ++s) {
    const int n = cfg_.kernel_sizes[s];
    const int off = (n - 1) / 2;
    // zero-padded copy so that every n x n window is a plain block
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(lq + n - 1, ld + n - 1);
    padded.block(off, off, lq, ld) = x.sim;
    Eigen::MatrixXd best = Eigen::MatrixXd::Zero(lq, ld);
    Eigen::MatrixXi winner = Eigen::MatrixXi::Constant(lq, ld, -1);
    Eigen::MatrixXd pre(lq, ld);
    for (int f = 0; f < cfg_.filters; ++f) {
      const double* w = p.data() + conv_offsets_[s] + static_cast<std::size_t>(f * n * n);
      pre.setConstant(p[conv_bias_offset(s) + static_cast<std::size_t>(f)]);
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) pre += w[a * n + c] * padded.block(a, c, lq, ld);
      for (Eigen::Index j = 0; j < ld; ++j)
        for (Eigen::Index i = 0; i < lq; ++i)
          if (pre(i, j) > best(i, j)) {
            best(i, j) = pre(i, j);
            winner(i, j) = f;
          }
    }
    Eigen::MatrixXi am;
    rows.middleCols(static_cast<Eigen::Index>((s + 1) * static_cast<std::size_t>(k)), k) = kmax_rows(best, k, &am);
    conv_argmax.push_back(std::move(am));
    conv_filter.push_back(std::move(winner));
  }
  rows.col(width - 1) = x.idf_softmax;

  Eigen::MatrixXd gates(lq, 4);
  Eigen::VectorXd cells(lq), hidden(lq);
  double h = 0.0, c = 0.0;
  for (Eigen::Index t = 0; t < lq; ++t) {
    double act[4];
    for (int g = 0; g < 4; ++g) {
      const double* base = p.data() + gate_offset(g);
      Eigen::Map<const Eigen::RowVectorXd> wx(base, width);
      const double z = wx.dot(rows.row(t)) + base[width] * h + base[width + 1];
      act[g] = g == kCell ? std::tanh(z) : sigmoid(z);
      gates(t, g) = act[g];
    }
    c = act[kForget] * c + act[kInput] * act[kCell];
    h = act[kOutput] * std::tanh(c);
    cells(t) = c;
    hidden(t) = h;
  }
  if (cache) {
    cache->rows = std::move(rows);
    cache->conv_argmax = std::move(conv_argmax);
    cache->conv_filter = std::move(conv_filter);
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->hidden = std::move(hidden);
    cache->score = h;
  }
  return h;
}

void PacrrArchitecture::backward(std::span<const double> p, const PacrrFeatures& x, const Cache& cc, double d_score,
                                 std::span<double> grad) const {
  const Eigen::Index lq = x.sim.rows();
  const int k = cfg_.kmax;
  const int width = row_width();
  Eigen::MatrixXd d_rows = Eigen::MatrixXd::Zero(lq, width);

  double dh = d_score, dc = 0.0;
  for (Eigen::Index t = lq - 1; t >= 0; --t) {
    const double i = cc.gates(t, kInput), f = cc.gates(t, kForget), o = cc.gates(t, kOutput), g = cc.gates(t, kCell);
    const double c = cc.cells(t);
    const double c_prev = t > 0 ? cc.cells(t - 1) : 0.0;
    const double h_prev = t > 0 ? cc.hidden(t - 1) : 0.0;
    const double tc = std::tanh(c);
    dc += dh * o * (1.0 - tc * tc);
    double dz[4];
    dz[kOutput] = dh * tc * o * (1.0 - o);
    dz[kInput] = dc * g * i * (1.0 - i);
    dz[kForget] = dc * c_prev * f * (1.0 - f);
    dz[kCell] = dc * i * (1.0 - g * g);
    double dh_prev = 0.0;
    for (int q = 0; q < 4; ++q) {
      const auto base = gate_offset(q);
      Eigen::Map<Eigen::RowVectorXd> dwx(grad.data() + base, width);
      Eigen::Map<const Eigen::RowVectorXd> wx(p.data() + base, width);
      dwx += dz[q] * cc.rows.row(t);
      grad[base + static_cast<std::size_t>(width)] += dz[q] * h_prev;
      grad[base + static_cast<std::size_t>(width + 1)] += dz[q];
      d_rows.row(t) += dz[q] * wx;
      dh_prev += dz[q] * p[base + static_cast<std::size_t>(width)];
    }
    dh = dh_prev;
    dc *= f;
  }

  // Gradients reach the convolutions only through the k-max winners.
  for (std::size_t s = 0; s < cfg_.kernel_sizes.size(); ++s) {
    const int n = cfg_.kernel_sizes[s];
    const int off = (n - 1) / 2;
    const auto col0 = static_cast<Eigen::Index>((s + 1) * static_cast<std::size_t>(k));
    for (Eigen::Index t = 0; t < lq; ++t) {
      for (int r = 0; r < k; ++r) {
        const int j = cc.conv_argmax[s](t, r);
        if (j < 0) continue;
        const int f = cc.conv_filter[s](t, j);
        if (f < 0) continue;  // relu inactive
        const double d = d_rows(t, col0 + r);
        double* dw = grad.data() + conv_offsets_[s] + static_cast<std::size_t>(f * n * n);
        for (int a = 0; a < n; ++a) {
          const Eigen::Index row = t + a - off;
          if (row < 0 || row >= x.sim.rows()) continue;
          for (int c = 0; c < n; ++c) {
            const Eigen::Index col = j + c - off;
            if (col < 0 || col >= x.sim.cols()) continue;
            dw[a * n + c] += d * x.sim(row, col);
          }
        }
        grad[conv_bias_offset(s) + static_cast<std::size_t>(f)] += d;
      }
    }
  }
}

}  // namespace regir::neural
