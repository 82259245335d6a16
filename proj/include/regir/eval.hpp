#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/ranked_list.hpp"

namespace regir {

// Binary relevance throughout. Each metric throws std::invalid_argument when
// the relevant set is empty; evaluate() excludes such queries instead.

/// |top-k ∩ relevant| / |relevant|
double recall_at_k(const RankedList& list, const RelevantSet& relevant, std::size_t k);
/// DCG@k / ideal DCG@k with gain 1 and discount log2(rank + 1).
double ndcg_at_k(const RankedList& list, const RelevantSet& relevant, std::size_t k);
/// |top-R ∩ relevant| / R for R = |relevant|.
double r_precision(const RankedList& list, const RelevantSet& relevant);

struct QueryMetrics {
  std::string query_id;
  double r_at_20 = 0.0;
  double ndcg_at_20 = 0.0;
  double rp = 0.0;
};

struct EvalReport {
  std::vector<QueryMetrics> per_query;    // sorted by query id
  std::vector<std::string> excluded;      // queries with no relevant documents
  double mean_r_at_20 = 0.0;
  double mean_ndcg_at_20 = 0.0;
  double mean_rp = 0.0;

  /// `query_id,r_at_20,ndcg_at_20,rp` plus a `mean` summary row.
  void write_csv(std::ostream& out, const std::string& manifest_hash = {}) const;
  void save(const std::filesystem::path& path, const std::string& manifest_hash = {}) const;
  static EvalReport load(const std::filesystem::path& path);
};

/// Macro-averages over the queries that have judgments. Queries with judgments
/// but no list count as empty rankings.
EvalReport evaluate(const RunFile& run, const Qrels& qrels, const std::vector<std::string>& query_ids);
EvalReport evaluate(const RunFile& run, const Qrels& qrels);

/// Mean R@k over queries with judgments.
double mean_recall_at_k(const RunFile& run, const Qrels& qrels, const std::vector<std::string>& query_ids,
                        std::size_t k);

struct MetricSummary {
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
};

struct AggregateReport {
  std::vector<MetricSummary> metrics;  // r_at_20, ndcg_at_20, rp
  std::size_t runs = 0;

  /// `metric,mean,sd`
  void write_csv(std::ostream& out, const std::string& manifest_hash = {}) const;
  const MetricSummary& get(const std::string& metric) const;
};

/// Mean and population sd across seeds. Throws if the runs cover different query sets.
AggregateReport aggregate_runs(std::span<const EvalReport> reports);

/// Percentages with one decimal, e.g. "43.3 (± 0.2)".
std::string format_mean_sd(double mean, double sd);

/// `k,recall` for k = 1..k_max.
std::vector<double> recall_curve(const RunFile& run, const Qrels& qrels, const std::vector<std::string>& query_ids,
                                 std::size_t k_max);
void write_recall_curve(const std::vector<double>& curve, std::ostream& out, const std::string& manifest_hash = {});

}  // namespace regir
