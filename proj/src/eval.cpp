#include "regir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "regir/util.hpp"

namespace regir {

namespace {

void require_judgments(const RelevantSet& relevant) {
  if (relevant.empty()) throw std::invalid_argument("metric undefined for an empty relevant set");
}

std::size_t hits_in_prefix(const RankedList& list, const RelevantSet& relevant, std::size_t k) {
  std::size_t hits = 0;
  const std::size_t n = std::min(k, list.entries.size());
  for (std::size_t i = 0; i < n; ++i) hits += relevant.count(list.entries[i].doc_id);
  return hits;
}

}  // namespace

double recall_at_k(const RankedList& list, const RelevantSet& relevant, std::size_t k) {
  require_judgments(relevant);
  return static_cast<double>(hits_in_prefix(list, relevant, k)) / static_cast<double>(relevant.size());
}

double ndcg_at_k(const RankedList& list, const RelevantSet& relevant, std::size_t k) {
  require_judgments(relevant);
  double dcg = 0.0;
  const std::size_t n = std::min(k, list.entries.size());
  for (std::size_t i = 0; i < n; ++i)
    if (relevant.count(list.entries[i].doc_id)) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  double ideal = 0.0;
  const std::size_t m = std::min(k, relevant.size());
  for (std::size_t i = 0; i < m; ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return ideal > 0.0 ? dcg / ideal : 0.0;
}

double r_precision(const RankedList& list, const RelevantSet& relevant) {
  require_judgments(relevant);
  return recall_at_k(list, relevant, relevant.size());
}

EvalReport evaluate(const RunFile& run, const Qrels& qrels, const std::vector<std::string>& query_ids) {
  EvalReport report;
  std::set<std::string> ids(query_ids.begin(), query_ids.end());
  for (const auto& qid : ids) {
    const auto& rel = qrels.relevant(qid);
    if (rel.empty()) {
      report.excluded.push_back(qid);
      continue;
    }
    auto it = run.find(qid);
    const RankedList empty{qid, {}};
    const RankedList& list = it == run.end() ? empty : it->second;
    report.per_query.push_back({qid, recall_at_k(list, rel, 20), ndcg_at_k(list, rel, 20), r_precision(list, rel)});
  }
  if (!report.per_query.empty()) {
    const double n = static_cast<double>(report.per_query.size());
    for (const auto& m : report.per_query) {
      report.mean_r_at_20 += m.r_at_20;
      report.mean_ndcg_at_20 += m.ndcg_at_20;
      report.mean_rp += m.rp;
    }
    report.mean_r_at_20 /= n;
    report.mean_ndcg_at_20 /= n;
    report.mean_rp /= n;
  }
  return report;
}

EvalReport evaluate(const RunFile& run, const Qrels& qrels) {
  std::vector<std::string> ids;
  for (const auto& [q, _] : run) ids.push_back(q);
  return evaluate(run, qrels, ids);
}

double mean_recall_at_k(const RunFile& run, const Qrels& qrels, const std::vector<std::string>& query_ids,
                        std::size_t k) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& qid : query_ids) {
    const auto& rel = qrels.relevant(qid);
    if (rel.empty()) continue;
    auto it = run.find(qid);
    if (it != run.end()) total += recall_at_k(it->second, rel, k);
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

void EvalReport::write_csv(std::ostream& out, const std::string& manifest_hash) const {
  if (!manifest_hash.empty()) out << "# manifest " << manifest_hash << '\n';
  out << "query_id,r_at_20,ndcg_at_20,rp\n";
  out << std::setprecision(6) << std::fixed;
  for (const auto& m : per_query) out << m.query_id << ',' << m.r_at_20 << ',' << m.ndcg_at_20 << ',' << m.rp << '\n';
  out << "mean," << mean_r_at_20 << ',' << mean_ndcg_at_20 << ',' << mean_rp << '\n';
  if (!excluded.empty()) out << "# excluded " << excluded.size() << " queries without relevant documents\n";
}

void EvalReport::save(const std::filesystem::path& path, const std::string& manifest_hash) const {
  std::ostringstream out;
  write_csv(out, manifest_hash);
  write_file(path, out.str());
}

EvalReport EvalReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  EvalReport r;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != "query_id,r_at_20,ndcg_at_20,rp") throw ParseError(path.string(), line_no, "unexpected header");
      header = true;
      continue;
    }
    auto cols = split(t, ',');
    if (cols.size() != 4) throw ParseError(path.string(), line_no, "expected 4 columns");
    QueryMetrics m{cols[0], std::stod(cols[1]), std::stod(cols[2]), std::stod(cols[3])};
    if (m.query_id == "mean") {
      r.mean_r_at_20 = m.r_at_20;
      r.mean_ndcg_at_20 = m.ndcg_at_20;
      r.mean_rp = m.rp;
    } else {
      r.per_query.push_back(std::move(m));
    }
  }
  return r;
}

const MetricSummary& AggregateReport::get(const std::string& metric) const {
  for (const auto& m : metrics)
    if (m.metric == metric) return m;
  throw Error("no metric '" + metric + "' in aggregate report");
}

void AggregateReport::write_csv(std::ostream& out, const std::string& manifest_hash) const {
  if (!manifest_hash.empty()) out << "# manifest " << manifest_hash << '\n';
  out << "metric,mean,sd\n" << std::setprecision(6) << std::fixed;
  for (const auto& m : metrics) out << m.metric << ',' << m.mean << ',' << m.sd << '\n';
}

AggregateReport aggregate_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_runs needs at least one report");
  auto ids_of = [](const EvalReport& r) {
    std::vector<std::string> ids;
    for (const auto& m : r.per_query) ids.push_back(m.query_id);
    return ids;
  };
  const auto reference = ids_of(reports.front());
  for (const auto& r : reports)
    if (ids_of(r) != reference) throw Error("aggregate_runs: reports cover different query sets");

  AggregateReport agg;
  agg.runs = reports.size();
  auto summarize = [&](const std::string& name, double EvalReport::*field) {
    const double n = static_cast<double>(reports.size());
    double mean = 0.0;
    for (const auto& r : reports) mean += r.*field;
    mean /= n;
    double var = 0.0;
    for (const auto& r : reports) var += (r.*field - mean) * (r.*field - mean);
    agg.metrics.push_back({name, mean, std::sqrt(var / n)});
  };
  summarize("r_at_20", &EvalReport::mean_r_at_20);
  summarize("ndcg_at_20", &EvalReport::mean_ndcg_at_20);
  summarize("rp", &EvalReport::mean_rp);
  return agg;
}

std::string format_mean_sd(double mean, double sd) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << mean * 100.0 << " (± " << sd * 100.0 << ")";
  return out.str();
}

std::vector<double> recall_curve(const RunFile& run, const Qrels& qrels, const std::vector<std::string>& query_ids,
                                 std::size_t k_max) {
  std::vector<double> curve(k_max, 0.0);
  std::size_t n = 0;
  for (const auto& qid : query_ids) {
    const auto& rel = qrels.relevant(qid);
    if (rel.empty()) continue;
    ++n;
    auto it = run.find(qid);
    if (it == run.end()) continue;
    std::size_t hits = 0;
    const auto& entries = it->second.entries;
    for (std::size_t k = 1; k <= k_max; ++k) {
      if (k <= entries.size()) hits += rel.count(entries[k - 1].doc_id);
      curve[k - 1] += static_cast<double>(hits) / static_cast<double>(rel.size());
    }
  }
  if (n)
    for (auto& v : curve) v /= static_cast<double>(n);
  return curve;
}

void write_recall_curve(const std::vector<double>& curve, std::ostream& out, const std::string& manifest_hash) {
  if (!manifest_hash.empty()) out << "# manifest " << manifest_hash << '\n';
  out << "k,recall\n" << std::setprecision(6) << std::fixed;
  for (std::size_t k = 1; k <= curve.size(); ++k) out << k << ',' << curve[k - 1] << '\n';
}

}  // namespace regir
