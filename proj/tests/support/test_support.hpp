#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the engine's scoring code.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

namespace regir::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& label = "regir") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (label + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

using Tokens = std::vector<std::string>;

/// Random bag-of-words corpus over `vocab` terms named t0, t1, ...
inline std::vector<Tokens> random_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t vocab,
                                         std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  // skewed term choice so some terms are frequent and many are rare
  std::vector<double> weights(vocab);
  for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> term(weights.begin(), weights.end());
  std::vector<Tokens> out(docs);
  for (auto& d : out) {
    d.resize(len(rng));
    for (auto& t : d) t = "t" + std::to_string(term(rng));
  }
  return out;
}

/// Okapi BM25 by full scan: recounts df, lengths and tf for every call.
inline double naive_bm25(const Tokens& query, const std::vector<Tokens>& docs, std::size_t doc, double k1, double b) {
  const double n = static_cast<double>(docs.size());
  double total_len = 0.0;
  for (const auto& d : docs) total_len += static_cast<double>(d.size());
  const double avg = total_len / n;
  double score = 0.0;
  for (const auto& q : query) {
    double df = 0.0;
    for (const auto& d : docs)
      if (std::find(d.begin(), d.end(), q) != d.end()) df += 1.0;
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double tf = static_cast<double>(std::count(docs[doc].begin(), docs[doc].end(), q));
    const double len = static_cast<double>(docs[doc].size());
    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
  }
  return score;
}

/// Descending score, ascending id on ties.
inline std::vector<std::pair<std::string, double>> sort_desc(std::vector<std::pair<std::string, double>> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& c) {
    if (a.second != c.second) return a.second > c.second;
    return a.first < c.first;
  });
  return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return -1.0;
  return dot / std::sqrt(na * nb);
}

/// DCG with gain 1 at 1-based ranks and discount log2(rank + 1).
inline double naive_ndcg(const std::vector<bool>& rel_at_rank, std::size_t total_relevant, std::size_t k) {
  double dcg = 0.0, ideal = 0.0;
  for (std::size_t r = 0; r < std::min(k, rel_at_rank.size()); ++r)
    if (rel_at_rank[r]) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  for (std::size_t r = 0; r < std::min(k, total_relevant); ++r) ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / ideal;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central differences with step h; relative error |a - n| / max(|a|, |n|, floor).
inline GradCheck finite_difference_check(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> params, const std::vector<double>& analytic,
                                         double h = 1e-5, double floor = 1e-6) {
  GradCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f(params);
    params[i] = saved - h;
    const double down = f(params);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) / std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    if (err > out.max_rel_error) out = {err, i, analytic[i], numeric};
  }
  return out;
}

}  // namespace regir::testing
