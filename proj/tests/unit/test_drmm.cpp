#include "unit.hpp"

#include <cmath>
#include <random>

#include "regir/neural/drmm.hpp"
#include "test_support.hpp"

using namespace regir;
using namespace regir::neural;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

/// Plain-loop DRMM forward pass over the flat parameter layout.
double oracle_forward(const std::vector<double>& p, const DrmmFeatures& x, int bins, int hidden) {
  const int w = bins + 1;
  const std::size_t b1 = static_cast<std::size_t>(hidden * w), w2 = b1 + static_cast<std::size_t>(hidden),
                    g = w2 + static_cast<std::size_t>(hidden);
  const auto terms = static_cast<std::size_t>(x.histograms.rows());
  std::vector<double> term_score(terms), logit(terms);
  for (std::size_t t = 0; t < terms; ++t) {
    double s = 0.0;
    for (int h = 0; h < hidden; ++h) {
      double z = p[b1 + static_cast<std::size_t>(h)];
      for (int c = 0; c < w; ++c)
        z += p[static_cast<std::size_t>(h * w + c)] * x.histograms(static_cast<Eigen::Index>(t), c);
      s += p[w2 + static_cast<std::size_t>(h)] * std::tanh(z);
    }
    term_score[t] = s;
    logit[t] = p[g] * x.idf(static_cast<Eigen::Index>(t));
  }
  double denom = 0.0;
  for (double l : logit) denom += std::exp(l);
  double out = 0.0;
  for (std::size_t t = 0; t < terms; ++t) out += std::exp(logit[t]) / denom * term_score[t];
  return out;
}

TokenMatrix random_tokens(std::mt19937_64& rng, const std::vector<std::string>& terms, int dim) {
  std::normal_distribution<double> g;
  std::map<std::string, Eigen::RowVectorXd> table;
  TokenMatrix m;
  m.terms = terms;
  m.vectors.resize(static_cast<Eigen::Index>(terms.size()), dim);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    auto it = table.find(terms[i]);
    if (it == table.end()) {
      Eigen::RowVectorXd v(dim);
      for (auto& x : v) x = g(rng);
      it = table.emplace(terms[i], v.normalized()).first;
    }
    m.vectors.row(static_cast<Eigen::Index>(i)) = it->second;
  }
  return m;
}

}  // namespace

TEST_CASE("histogram binning" * doctest::test_suite("drmm")) {
  CHECK(similarity_counts(row({0.0, 0.5, 0.5}), 5) == (Eigen::VectorXd(6) << 0, 0, 1, 2, 0, 0).finished());
  auto exact = similarity_histogram(row({1.0}), 30);
  CHECK(exact.size() == 31);
  CHECK_NEAR(exact(30), std::log(2.0), 1e-15);
  CHECK(exact.head(30).isZero());
  auto neg = similarity_counts(row({-1.0}), 30);
  CHECK(neg(0) == 1.0);
  CHECK(neg.sum() == 1.0);
  CHECK(similarity_counts(row({0.9999999}), 4)(3) == 1.0);
  CHECK_THROWS(similarity_counts(row({0.0}), 0));
}

TEST_CASE("histogram of a query term against a document" * doctest::test_suite("drmm")) {
  VectorTable t(2);
  t.add("a", std::span<const double>(std::vector<double>{1.0, 0.0}));
  t.add("b", std::span<const double>(std::vector<double>{0.0, 1.0}));
  WordVectors wv(std::move(t));
  auto h = build_histogram("a", {"a"}, wv, 30);
  CHECK_NEAR(h(30), std::log(2.0), 1e-15);
  CHECK(h.sum() == doctest::Approx(std::log(2.0)));
  CHECK(build_histogram("oov", {"a", "b"}, wv, 30).isZero());
  auto counts = (build_histogram("a", {"a", "b", "zz"}, wv, 4).array().exp() - 1.0).eval();
  CHECK(counts(4) == doctest::Approx(1.0));
  CHECK(counts(2) == doctest::Approx(1.0));
  CHECK(counts.sum() == doctest::Approx(2.0));
}

TEST_CASE("single query term reduces to the MLP output" * doctest::test_suite("drmm")) {
  DrmmArchitecture arch({4, 3});
  std::vector<double> p(arch.num_params());
  Rng rng(3);
  arch.initialize(p, rng);
  DrmmFeatures x;
  x.histograms = Eigen::MatrixXd::Random(1, 5);
  x.idf = Eigen::VectorXd::Constant(1, 2.5);
  double mlp = 0.0;
  for (int h = 0; h < 3; ++h) {
    double z = p[arch.b1_offset() + static_cast<std::size_t>(h)];
    for (int c = 0; c < 5; ++c) z += p[static_cast<std::size_t>(h * 5 + c)] * x.histograms(0, c);
    mlp += p[arch.w2_offset() + static_cast<std::size_t>(h)] * std::tanh(z);
  }
  CHECK_NEAR(arch.forward(p, x), mlp, 1e-12);
}

TEST_CASE("initialization layout" * doctest::test_suite("drmm")) {
  DrmmArchitecture arch({30, 5});
  CHECK(arch.width() == 31);
  CHECK(arch.num_params() == 5u * 31u + 5u + 5u + 1u);
  std::vector<double> p(arch.num_params(), 7.0);
  Rng rng(1);
  arch.initialize(p, rng);
  for (int h = 0; h < 5; ++h) CHECK(p[arch.b1_offset() + static_cast<std::size_t>(h)] == 0.0);
  CHECK(p[arch.gate_offset()] == 1.0);
  const double limit = std::sqrt(6.0 / (31 + 5));
  for (std::size_t i = 0; i < arch.b1_offset(); ++i) CHECK(std::abs(p[i]) <= limit);
}

TEST_CASE("duplicated query terms score like the distinct set" * doctest::test_suite("drmm")) {
  std::mt19937_64 rng(4);
  DrmmArchitecture arch({6, 3});
  std::vector<double> p(arch.num_params());
  Rng init(4);
  arch.initialize(p, init);
  auto q = random_tokens(rng, {"x", "y", "x", "x", "y"}, 5);
  TokenMatrix distinct;
  distinct.terms = {"x", "y"};
  distinct.vectors = q.vectors.topRows(2);
  auto d = random_tokens(rng, {"x", "p", "q", "r"}, 5);
  d.vectors.row(0) = q.vectors.row(0);
  std::vector<double> idf_dup{1.0, 2.0, 1.0, 1.0, 2.0}, idf_distinct{1.0, 2.0};
  auto a = arch.featurize(q, idf_dup, d);
  auto b = arch.featurize(distinct, idf_distinct, d);
  CHECK(a.histograms.rows() == 2);
  CHECK(arch.forward(p, a) == arch.forward(p, b));
  CHECK_THROWS(arch.featurize(TokenMatrix{}, {}, d));
  CHECK_THROWS(arch.featurize(q, idf_distinct, d));
}

TEST_CASE("forward pass equals a straight-line reimplementation" * doctest::test_suite("drmm")) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    const int bins = 3 + trial % 5, hidden = 2 + trial % 4;
    DrmmArchitecture arch({bins, hidden});
    std::vector<double> p(arch.num_params());
    for (auto& v : p) v = g(rng);
    DrmmFeatures x;
    const int terms = 1 + trial % 4;
    x.histograms = Eigen::MatrixXd::NullaryExpr(terms, bins + 1, [&] { return std::abs(g(rng)); });
    x.idf = Eigen::VectorXd::NullaryExpr(terms, [&] { return 3.0 * std::abs(g(rng)); });
    CHECK_NEAR(arch.forward(p, x), oracle_forward(p, x, bins, hidden), 1e-10);
  }
}

TEST_CASE("analytic gradient matches central differences" * doctest::test_suite("drmm")) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    DrmmArchitecture arch({4, 3});
    std::vector<double> p(arch.num_params());
    for (auto& v : p) v = 0.7 * g(rng);
    DrmmFeatures x;
    x.histograms = Eigen::MatrixXd::NullaryExpr(3, 5, [&] { return std::abs(g(rng)); });
    x.idf = Eigen::VectorXd::NullaryExpr(3, [&] { return std::abs(g(rng)); });
    DrmmArchitecture::Cache cache;
    arch.forward(p, x, &cache);
    std::vector<double> grad(p.size(), 0.0);
    arch.backward(p, x, cache, 1.0, grad);
    auto check = regir::testing::finite_difference_check([&](const std::vector<double>& q) { return arch.forward(q, x); },
                                                         p, grad);
    INFO("worst parameter " << check.worst_index << " analytic " << check.analytic << " numeric " << check.numeric);
    CHECK(check.max_rel_error < 1e-4);

    std::vector<double> scaled(p.size(), 0.0);
    arch.backward(p, x, cache, -2.5, scaled);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK_NEAR(scaled[i], -2.5 * grad[i], 1e-12);
  }
}
