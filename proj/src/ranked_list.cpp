#include "regir/ranked_list.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "regir/util.hpp"

namespace regir {

RankedList RankedList::truncated(std::size_t k) const {
  RankedList out{query_id, {}};
  out.entries.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(std::min(k, entries.size())));
  return out;
}

bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

void sort_ranked(std::vector<ScoredDoc>& entries) { std::sort(entries.begin(), entries.end(), ranks_before); }

void select_top_k(std::vector<ScoredDoc>& entries, std::size_t k) {
  if (k < entries.size()) {
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k), entries.end(), ranks_before);
    entries.resize(k);
  } else {
    sort_ranked(entries);
  }
}

bool is_well_formed(const RankedList& list) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    if (!seen.insert(list.entries[i].doc_id).second) return false;
    if (i > 0 && list.entries[i].score > list.entries[i - 1].score) return false;
  }
  return true;
}

void write_run(const RunFile& run, const std::filesystem::path& path, const std::string& comment) {
  std::ostringstream out;
  if (!comment.empty()) out << "# " << comment << '\n';
  out << std::setprecision(17);
  for (const auto& [qid, list] : run) {
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      const auto& e = list.entries[i];
      out << qid << " Q0 " << e.doc_id << ' ' << (i + 1) << ' ' << format_double(e.score) << ' '
          << (e.stage.empty() ? "-" : e.stage) << '\n';
    }
  }
  write_file(path, out.str());
}

RunFile read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run file " + path.string());
  RunFile run;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ls{std::string(t)};
    std::string qid, q0, doc, stage;
    std::size_t rank = 0;
    std::string score;
    if (!(ls >> qid >> q0 >> doc >> rank >> score)) throw ParseError(path.string(), line_no, "expected qid Q0 doc rank score [stage]");
    ls >> stage;
    auto& list = run[qid];
    list.query_id = qid;
    double s;
    try {
      s = std::stod(score);
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_no, "bad score '" + score + "'");
    }
    list.entries.push_back({doc, s, stage == "-" ? std::string() : stage});
  }
  for (auto& [qid, list] : run) {
    if (!is_well_formed(list)) throw Error(path.string() + ": list for query '" + qid + "' is not a valid ranking");
  }
  return run;
}

RunFile to_run(std::vector<RankedList> lists) {
  RunFile run;
  for (auto& l : lists) {
    auto id = l.query_id;
    run.emplace(std::move(id), std::move(l));
  }
  return run;
}

}  // namespace regir
