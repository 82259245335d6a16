#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/ranked_list.hpp"

namespace regir {

enum class FilterMode { Pre, Post };

FilterMode parse_filter_mode(std::string_view s);

/// Window size meaning "no filtering".
inline constexpr int kUnboundedWindow = std::numeric_limits<int>::max();

struct DateWindow {
  int max_distance_years = kUnboundedWindow;
  FilterMode mode = FilterMode::Post;

  void validate() const;
};

/// Keeps entries with |year(doc) - query_year| <= max_years. Undated documents
/// (year 0) always pass; an undated query leaves the list untouched.
RankedList apply_filter(int query_year, const RankedList& list, int max_years, const Collection& pool);

/// Pre-filtering with refill: filters a deeper list and keeps the first k survivors.
RankedList prefilter(int query_year, const RankedList& deep_list, int max_years, std::size_t k, const Collection& pool);

using ListTransform = std::function<RankedList(const RankedList&)>;

/// Picks the window with the highest mean dev R@20 (ties -> larger window).
/// `downstream` (e.g. a re-ranker) runs after pre-filtering, or before
/// post-filtering. Lists are truncated to k before downstream in pre mode.
int choose_window(const RunFile& dev_lists, const Collection& queries, const Collection& pool, const Qrels& qrels,
                  const std::vector<int>& grid, FilterMode mode, std::size_t k, const ListTransform& downstream = {});

/// year(relevant) - year(query) counts over the given queries (dated pairs only).
std::map<int, std::size_t> year_difference_histogram(const std::vector<std::string>& query_ids, const Qrels& qrels,
                                                     const Collection& queries, const Collection& pool);
/// `year_diff,count`
void write_year_histogram(const std::map<int, std::size_t>& hist, std::ostream& out, const std::string& manifest_hash = {});

}  // namespace regir
