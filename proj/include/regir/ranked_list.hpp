#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace regir {

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
  std::string stage;  // which stage produced the score: bm25, w2v-cent, ensemble, drmm, ...

  bool operator==(const ScoredDoc&) const = default;
};

/// Ranked documents for one query. Scores non-increasing, ids unique.
struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  /// First k entries (or all of them).
  RankedList truncated(std::size_t k) const;
  bool operator==(const RankedList&) const = default;
};

/// Descending score, ascending doc_id on ties.
bool ranks_before(const ScoredDoc& a, const ScoredDoc& b);
void sort_ranked(std::vector<ScoredDoc>& entries);
/// Top-k under ranks_before without sorting the whole vector.
void select_top_k(std::vector<ScoredDoc>& entries, std::size_t k);
/// Checks ordering and uniqueness invariants.
bool is_well_formed(const RankedList& list);

/// Query id -> list, ordered by query id.
using RunFile = std::map<std::string, RankedList>;

/// TREC run format: `qid Q0 doc_id rank score stage`.
void write_run(const RunFile& run, const std::filesystem::path& path, const std::string& comment = {});
RunFile read_run(const std::filesystem::path& path);
RunFile to_run(std::vector<RankedList> lists);

}  // namespace regir
