#include "regir/temporal.hpp"

#include <cstdlib>

#include "regir/eval.hpp"
#include "regir/util.hpp"

namespace regir {

FilterMode parse_filter_mode(std::string_view s) {
  if (s == "pre") return FilterMode::Pre;
  if (s == "post") return FilterMode::Post;
  throw Error("unknown filter mode '" + std::string(s) + "' (expected pre or post)");
}

void DateWindow::validate() const {
  if (max_distance_years < 0) throw Error("date window must be >= 0 years");
}

RankedList apply_filter(int query_year, const RankedList& list, int max_years, const Collection& pool) {
  DateWindow{max_years}.validate();
  if (query_year == 0 || max_years == kUnboundedWindow) return list;
  RankedList out{list.query_id, {}};
  for (const auto& e : list.entries) {
    const int y = pool.year_of(e.doc_id);
    if (y == 0 || std::abs(y - query_year) <= max_years) out.entries.push_back(e);
  }
  return out;
}

RankedList prefilter(int query_year, const RankedList& deep_list, int max_years, std::size_t k, const Collection& pool) {
  return apply_filter(query_year, deep_list, max_years, pool).truncated(k);
}

int choose_window(const RunFile& dev_lists, const Collection& queries, const Collection& pool, const Qrels& qrels,
                  const std::vector<int>& grid, FilterMode mode, std::size_t k, const ListTransform& downstream) {
  if (grid.empty()) throw Error("choose_window: empty grid");
  std::vector<std::string> ids;
  for (const auto& [q, _] : dev_lists) ids.push_back(q);
  auto transform = [&](const RankedList& l) { return downstream ? downstream(l) : l; };

  int best = grid.front();
  double best_recall = -1.0;
  for (int y : grid) {
    RunFile filtered;
    for (const auto& [q, list] : dev_lists) {
      const int qy = queries.year_of(q);
      RankedList out = mode == FilterMode::Pre ? transform(prefilter(qy, list, y, k, pool))
                                               : apply_filter(qy, transform(list.truncated(k)), y, pool);
      filtered.emplace(q, std::move(out));
    }
    const double r = mean_recall_at_k(filtered, qrels, ids, 20);
    if (r > best_recall || (r == best_recall && y > best)) {
      best = y;
      best_recall = r;
    }
  }
  return best;
}

std::map<int, std::size_t> year_difference_histogram(const std::vector<std::string>& query_ids, const Qrels& qrels,
                                                     const Collection& queries, const Collection& pool) {
  std::map<int, std::size_t> hist;
  for (const auto& q : query_ids) {
    const int qy = queries.year_of(q);
    if (qy == 0) continue;
    for (const auto& d : qrels.relevant(q)) {
      const int dy = pool.year_of(d);
      if (dy != 0) ++hist[dy - qy];
    }
  }
  return hist;
}

void write_year_histogram(const std::map<int, std::size_t>& hist, std::ostream& out, const std::string& manifest_hash) {
  if (!manifest_hash.empty()) out << "# manifest " << manifest_hash << '\n';
  out << "year_diff,count\n";
  for (const auto& [d, n] : hist) out << d << ',' << n << '\n';
}

}  // namespace regir
