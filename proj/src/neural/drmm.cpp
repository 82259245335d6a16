#include "regir/neural/drmm.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace regir::neural {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double uniform_symmetric(Rng& rng, double limit) { return (2.0 * uniform_real(rng) - 1.0) * limit; }

}  // namespace

Eigen::VectorXd similarity_counts(const Eigen::Ref<const Eigen::RowVectorXd>& sims, int bins) {
  if (bins < 1) throw Error("histogram needs at least one bin");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins + 1);
  for (Eigen::Index j = 0; j < sims.size(); ++j) {
    const double s = sims(j);
    if (s >= 1.0) {
      counts(bins) += 1.0;
      continue;
    }
    int b = static_cast<int>(std::floor((s + 1.0) * 0.5 * bins));
    counts(std::clamp(b, 0, bins - 1)) += 1.0;
  }
  return counts;
}

Eigen::VectorXd similarity_histogram(const Eigen::Ref<const Eigen::RowVectorXd>& sims, int bins) {
  return similarity_counts(sims, bins).array().log1p().matrix();
}

Eigen::VectorXd build_histogram(const std::string& query_term, const TokenList& doc_tokens, const WordVectors& vectors,
                                int bins) {
  if (!vectors.contains(query_term)) return Eigen::VectorXd::Zero(bins + 1);
  WordVectorEmbedder embedder(vectors);
  auto q = embedder.embed({}, {query_term});
  auto d = embedder.embed({}, doc_tokens);
  Eigen::MatrixXd s = similarity_matrix(q, d);
  return similarity_histogram(s.row(0), bins);
}

DrmmArchitecture::DrmmArchitecture(Config cfg) : cfg_(cfg) {
  if (cfg_.bins < 1 || cfg_.hidden < 1) throw Error("DRMM needs bins >= 1 and hidden >= 1");
}

std::size_t DrmmArchitecture::num_params() const { return gate_offset() + 1; }

void DrmmArchitecture::initialize(std::span<double> p, Rng& rng) const {
  const double l1 = std::sqrt(6.0 / (width() + cfg_.hidden));
  const double l2 = std::sqrt(6.0 / (cfg_.hidden + 1));
  for (std::size_t i = w1_offset(); i < b1_offset(); ++i) p[i] = uniform_symmetric(rng, l1);
  for (std::size_t i = b1_offset(); i < w2_offset(); ++i) p[i] = 0.0;
  for (std::size_t i = w2_offset(); i < gate_offset(); ++i) p[i] = uniform_symmetric(rng, l2);
  p[gate_offset()] = 1.0;
}

DrmmFeatures DrmmArchitecture::featurize(const TokenMatrix& query, std::span<const double> query_idf,
                                         const TokenMatrix& doc) const {
  if (query_idf.size() != query.size()) throw Error("DRMM: query idf / token count mismatch");
  TokenMatrix distinct;
  std::vector<double> idf;
  std::unordered_set<std::string> seen;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (!seen.insert(query.terms[i]).second) continue;
    distinct.terms.push_back(query.terms[i]);
    rows.push_back(static_cast<Eigen::Index>(i));
    idf.push_back(query_idf[i]);
  }
  if (rows.empty()) throw Error("DRMM: empty query after denoising");
  distinct.vectors.resize(static_cast<Eigen::Index>(rows.size()), query.vectors.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) distinct.vectors.row(static_cast<Eigen::Index>(r)) = query.vectors.row(rows[r]);

  DrmmFeatures x;
  x.idf = Eigen::Map<const Eigen::VectorXd>(idf.data(), static_cast<Eigen::Index>(idf.size()));
  x.histograms.resize(static_cast<Eigen::Index>(rows.size()), width());
  if (doc.size() == 0) {
    x.histograms.setZero();
    return x;
  }
  Eigen::MatrixXd s = similarity_matrix(distinct, doc);
  for (Eigen::Index i = 0; i < s.rows(); ++i) x.histograms.row(i) = similarity_histogram(s.row(i), cfg_.bins).transpose();
  return x;
}

double DrmmArchitecture::forward(std::span<const double> p, const DrmmFeatures& x, Cache* cache) const {
  const Eigen::Index hidden = cfg_.hidden, w = width();
  if (x.histograms.cols() != w) throw Error("DRMM: histogram width mismatch");
  Eigen::Map<const RowMajor> w1(p.data() + w1_offset(), hidden, w);
  Eigen::Map<const Eigen::VectorXd> b1(p.data() + b1_offset(), hidden);
  Eigen::Map<const Eigen::VectorXd> w2(p.data() + w2_offset(), hidden);
  const double g = p[gate_offset()];

  Eigen::MatrixXd act = ((x.histograms * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  Eigen::VectorXd term_scores = act * w2;
  Eigen::VectorXd logits = g * x.idf;
  Eigen::VectorXd gates = (logits.array() - logits.maxCoeff()).exp().matrix();
  gates /= gates.sum();
  const double score = gates.dot(term_scores);
  if (cache) {
    cache->activations = std::move(act);
    cache->term_scores = std::move(term_scores);
    cache->gates = std::move(gates);
    cache->score = score;
  }
  return score;
}

void DrmmArchitecture::backward(std::span<const double> p, const DrmmFeatures& x, const Cache& c, double d_score,
                                std::span<double> grad) const {
  const Eigen::Index hidden = cfg_.hidden, w = width();
  Eigen::Map<const Eigen::VectorXd> w2(p.data() + w2_offset(), hidden);
  Eigen::Map<RowMajor> d_w1(grad.data() + w1_offset(), hidden, w);
  Eigen::Map<Eigen::VectorXd> d_b1(grad.data() + b1_offset(), hidden);
  Eigen::Map<Eigen::VectorXd> d_w2(grad.data() + w2_offset(), hidden);

  // s = sum_i p_i m_i with p = softmax(g * idf)
  Eigen::VectorXd d_term = d_score * c.gates;                                                   // ds/dm_i
  Eigen::VectorXd d_logits = d_score * c.gates.cwiseProduct((c.term_scores.array() - c.score).matrix());
  grad[gate_offset()] += d_logits.dot(x.idf);
  d_w2 += c.activations.transpose() * d_term;
  // dm_i/da_i = w2; tanh' = 1 - a^2
  Eigen::MatrixXd d_pre = (d_term * w2.transpose()).cwiseProduct((1.0 - c.activations.array().square()).matrix());
  d_w1 += d_pre.transpose() * x.histograms;
  d_b1 += d_pre.colwise().sum().transpose();
}

}  // namespace regir::neural
