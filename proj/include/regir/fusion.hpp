#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/ranked_list.hpp"

namespace regir {

struct FusionConfig {
  double alpha = 0.5;  // weight of component_a
  std::string component_a = "doc-vectors";
  std::string component_b = "bm25";

  void validate() const;
};

/// Per-query min-max to [0, 1]; a constant list maps to all 1.0. Order kept.
RankedList normalize_scores(const RankedList& list);

/// ens = alpha * a + (1 - alpha) * b over the union of both lists, missing
/// entries scoring 0. Inputs must already be normalized. Top-k, ties by doc_id.
RankedList fuse(const RankedList& a, const RankedList& b, double alpha, std::size_t k);

struct AlphaTuneResult {
  double alpha = 0.0;
  double best_recall = 0.0;
  std::vector<double> alphas;
  std::vector<double> recall;  // mean R@k per alpha

  /// `alpha,recall_at_k`
  void write_csv(std::ostream& out, const std::string& manifest_hash = {}) const;
};

/// Grid search over alpha by mean R@k on dev queries; ties go to the smaller alpha.
/// Component runs are normalized here.
AlphaTuneResult tune_alpha(const std::vector<std::string>& query_ids, const Qrels& qrels, const RunFile& run_a,
                           const RunFile& run_b, const std::vector<double>& alpha_grid, std::size_t k);

/// Fuses two runs query by query (union of query ids).
RunFile fuse_runs(const RunFile& run_a, const RunFile& run_b, double alpha, std::size_t k);

}  // namespace regir
