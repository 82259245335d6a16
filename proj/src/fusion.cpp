#include "regir/fusion.hpp"

#include <algorithm>
#include <iomanip>
#include <map>

#include "regir/eval.hpp"
#include "regir/util.hpp"

namespace regir {

void FusionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("fusion alpha must be in [0, 1], got " + format_double(alpha));
}

RankedList normalize_scores(const RankedList& list) {
  RankedList out = list;
  if (list.entries.empty()) return out;
  auto [lo, hi] = std::minmax_element(list.entries.begin(), list.entries.end(),
                                      [](const ScoredDoc& a, const ScoredDoc& b) { return a.score < b.score; });
  const double min = lo->score, max = hi->score;
  for (auto& e : out.entries) e.score = max == min ? 1.0 : (e.score - min) / (max - min);
  return out;
}

RankedList fuse(const RankedList& a, const RankedList& b, double alpha, std::size_t k) {
  FusionConfig{alpha}.validate();
  if (!a.query_id.empty() && !b.query_id.empty() && a.query_id != b.query_id)
    throw Error("cannot fuse lists of different queries ('" + a.query_id + "' vs '" + b.query_id + "')");
  std::map<std::string, std::pair<double, double>> scores;
  for (const auto& e : a.entries) scores[e.doc_id].first = e.score;
  for (const auto& e : b.entries) scores[e.doc_id].second = e.score;
  RankedList out{a.query_id.empty() ? b.query_id : a.query_id, {}};
  out.entries.reserve(scores.size());
  for (const auto& [doc, s] : scores) out.entries.push_back({doc, alpha * s.first + (1.0 - alpha) * s.second, "ensemble"});
  select_top_k(out.entries, k);
  return out;
}

RunFile fuse_runs(const RunFile& run_a, const RunFile& run_b, double alpha, std::size_t k) {
  RunFile out;
  std::map<std::string, std::pair<const RankedList*, const RankedList*>> pairs;
  for (const auto& [q, l] : run_a) pairs[q].first = &l;
  for (const auto& [q, l] : run_b) pairs[q].second = &l;
  for (const auto& [q, p] : pairs) {
    const RankedList empty{q, {}};
    auto na = normalize_scores(p.first ? *p.first : empty);
    auto nb = normalize_scores(p.second ? *p.second : empty);
    out.emplace(q, fuse(na, nb, alpha, k));
  }
  return out;
}

AlphaTuneResult tune_alpha(const std::vector<std::string>& query_ids, const Qrels& qrels, const RunFile& run_a,
                           const RunFile& run_b, const std::vector<double>& alpha_grid, std::size_t k) {
  if (alpha_grid.empty()) throw Error("tune_alpha: empty grid");
  for (double a : alpha_grid) FusionConfig{a}.validate();
  RunFile na, nb;
  for (const auto& q : query_ids) {
    if (auto it = run_a.find(q); it != run_a.end()) na.emplace(q, normalize_scores(it->second));
    if (auto it = run_b.find(q); it != run_b.end()) nb.emplace(q, normalize_scores(it->second));
  }
  AlphaTuneResult result;
  result.alphas = alpha_grid;
  result.recall.resize(alpha_grid.size());
  parallel_for(alpha_grid.size(), [&](std::size_t i) {
    RunFile fused;
    for (const auto& q : query_ids) {
      const RankedList empty{q, {}};
      auto ia = na.find(q);
      auto ib = nb.find(q);
      fused.emplace(q, fuse(ia == na.end() ? empty : ia->second, ib == nb.end() ? empty : ib->second, alpha_grid[i], k));
    }
    result.recall[i] = mean_recall_at_k(fused, qrels, query_ids, k);
  });
  bool have = false;
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    const double r = result.recall[i];
    if (!have || r > result.best_recall || (r == result.best_recall && alpha_grid[i] < result.alpha)) {
      result.alpha = alpha_grid[i];
      result.best_recall = r;
      have = true;
    }
  }
  return result;
}

void AlphaTuneResult::write_csv(std::ostream& out, const std::string& manifest_hash) const {
  if (!manifest_hash.empty()) out << "# manifest " << manifest_hash << '\n';
  out << "alpha,recall_at_k\n";
  for (std::size_t i = 0; i < alphas.size(); ++i)
    out << format_double(alphas[i]) << ',' << std::fixed << std::setprecision(6) << recall[i] << std::defaultfloat << '\n';
}

}  // namespace regir
