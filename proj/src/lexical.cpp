#include "regir/lexical.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "regir/detail/binary_io.hpp"
#include "regir/eval.hpp"
#include "regir/util.hpp"

namespace regir {

void Bm25Params::validate() const {
  if (!(k1 >= 0.0)) throw Error("BM25 k1 must be >= 0, got " + format_double(k1));
  if (!(b >= 0.0 && b <= 1.0)) throw Error("BM25 b must be in [0, 1], got " + format_double(b));
}

PostingsIndex::PostingsIndex(std::vector<std::string> doc_ids, std::span<const TokenList> docs, TextPipeline pipeline)
    : pipeline_(std::move(pipeline)), doc_ids_(std::move(doc_ids)) {
  if (doc_ids_.empty()) throw Error("cannot index an empty pool");
  if (doc_ids_.size() != docs.size()) throw Error("doc id / token list count mismatch");
  doc_len_.resize(docs.size());
  std::unordered_map<std::string_view, std::uint32_t> tf;
  for (std::uint32_t d = 0; d < docs.size(); ++d) {
    doc_len_[d] = static_cast<std::uint32_t>(docs[d].size());
    tf.clear();
    for (const auto& tok : docs[d]) ++tf[tok];
    // Sorted insertion keeps term ids deterministic regardless of hash order.
    std::vector<std::pair<std::string_view, std::uint32_t>> sorted(tf.begin(), tf.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [term, count] : sorted) {
      auto [it, fresh] = term_ids_.emplace(std::string(term), static_cast<std::uint32_t>(postings_.size()));
      if (fresh) postings_.emplace_back();
      postings_[it->second].push_back({d, count});
    }
  }
  finalize();
}

void PostingsIndex::finalize() {
  doc_index_.clear();
  doc_index_.reserve(doc_ids_.size());
  for (std::uint32_t i = 0; i < doc_ids_.size(); ++i)
    if (!doc_index_.emplace(doc_ids_[i], i).second) throw Error("duplicate doc_id '" + doc_ids_[i] + "' in index");
  const double total = std::accumulate(doc_len_.begin(), doc_len_.end(), 0.0);
  avg_len_ = doc_len_.empty() ? 0.0 : total / static_cast<double>(doc_len_.size());
}

PostingsIndex PostingsIndex::build(const Collection& pool, StopwordList stopwords, bool idf_filter) {
  if (pool.empty()) throw Error("cannot index an empty pool");
  std::vector<TokenList> raw(pool.size());
  std::vector<std::string> ids(pool.size());
  const auto& docs = pool.documents();
  parallel_for(docs.size(), [&](std::size_t i) {
    raw[i] = tokenize(docs[i].full_text());
    ids[i] = docs[i].doc_id;
  });
  auto pipeline = TextPipeline::fit(raw, std::move(stopwords), idf_filter);
  std::vector<TokenList> processed(raw.size());
  parallel_for(raw.size(), [&](std::size_t i) { processed[i] = pipeline.process_tokens(raw[i]); });
  return PostingsIndex(std::move(ids), processed, std::move(pipeline));
}

std::uint32_t PostingsIndex::doc_index(std::string_view doc_id) const {
  auto it = doc_index_.find(std::string(doc_id));
  if (it == doc_index_.end()) throw Error("unknown doc_id '" + std::string(doc_id) + "'");
  return it->second;
}

std::uint32_t PostingsIndex::doc_len(std::string_view doc_id) const { return doc_len_[doc_index(doc_id)]; }

std::span<const Posting> PostingsIndex::postings(std::string_view term) const {
  auto it = term_ids_.find(std::string(term));
  if (it == term_ids_.end()) return {};
  return postings_[it->second];
}

std::vector<std::string> PostingsIndex::terms() const {
  std::vector<std::string> out;
  out.reserve(term_ids_.size());
  for (const auto& [t, _] : term_ids_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PostingsIndex::MatchedTerm> PostingsIndex::match(const TokenList& query) const {
  std::map<std::string_view, double> qtf;
  for (const auto& t : query) qtf[t] += 1.0;
  std::vector<MatchedTerm> out;
  for (const auto& [term, count] : qtf) {
    auto it = term_ids_.find(std::string(term));
    if (it == term_ids_.end()) continue;
    const auto& plist = postings_[it->second];
    out.push_back({pipeline_.idf().idf(term), count, plist});
  }
  return out;
}

void PostingsIndex::accumulate(std::span<const MatchedTerm> matched, const Bm25Params& params,
                               std::span<double> scores) const {
  std::fill(scores.begin(), scores.end(), 0.0);
  const double k1 = params.k1, b = params.b;
  for (const auto& m : matched) {
    const double weight = m.idf * m.query_tf * (k1 + 1.0);
    for (const auto& p : m.postings) {
      const double tf = static_cast<double>(p.tf);
      const double norm = k1 * (1.0 - b + b * static_cast<double>(doc_len_[p.doc]) / avg_len_);
      scores[p.doc] += weight * tf / (tf + norm);
    }
  }
}

RankedList PostingsIndex::rank(const std::string& query_id, std::span<const double> scores, std::size_t k) const {
  std::vector<ScoredDoc> entries;
  entries.reserve(scores.size());
  for (std::size_t d = 0; d < scores.size(); ++d) entries.push_back({doc_ids_[d], scores[d], "bm25"});
  select_top_k(entries, k);
  return RankedList{query_id, std::move(entries)};
}

double PostingsIndex::score(const TokenList& query, std::string_view doc_id, const Bm25Params& params) const {
  const std::uint32_t d = doc_index(doc_id);
  const double k1 = params.k1, b = params.b;
  const double norm = k1 * (1.0 - b + b * static_cast<double>(doc_len_[d]) / avg_len_);
  double total = 0.0;
  for (const auto& m : match(query)) {
    auto it = std::lower_bound(m.postings.begin(), m.postings.end(), d,
                               [](const Posting& p, std::uint32_t doc) { return p.doc < doc; });
    if (it == m.postings.end() || it->doc != d) continue;
    const double tf = static_cast<double>(it->tf);
    total += m.query_tf * m.idf * tf * (k1 + 1.0) / (tf + norm);
  }
  return total;
}

RankedList PostingsIndex::search(const QueryInput& query, const Bm25Params& params, std::size_t k) const {
  if (k == 0) throw Error("k must be >= 1");
  std::vector<double> scores(doc_ids_.size());
  auto matched = match(query.tokens);
  accumulate(matched, params, scores);
  return rank(query.id, scores, k);
}

namespace {

constexpr char kMagic[8] = {'R', 'E', 'G', 'I', 'R', 'I', 'D', 'X'};

}  // namespace

std::string PostingsIndex::serialize() const {
  detail::Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kFormatVersion);
  // Text pipeline.
  w.u32(pipeline_.idf_filter() ? 1 : 0);
  const auto& stop = pipeline_.stopwords().words();
  w.u64(stop.size());
  for (const auto& s : stop) w.str(s);
  const auto& idf = pipeline_.idf();
  w.u64(idf.doc_count());
  w.f64(idf.stopword_avg_idf());
  std::vector<std::pair<std::string, std::uint32_t>> df(idf.doc_freqs().begin(), idf.doc_freqs().end());
  std::sort(df.begin(), df.end());
  w.u64(df.size());
  for (const auto& [t, n] : df) {
    w.str(t);
    w.u32(n);
  }
  // Documents.
  w.u64(doc_ids_.size());
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    w.str(doc_ids_[i]);
    w.u32(doc_len_[i]);
  }
  // Postings in term order.
  auto vocab = terms();
  w.u64(vocab.size());
  for (const auto& t : vocab) {
    w.str(t);
    const auto& plist = postings_[term_ids_.at(t)];
    w.u64(plist.size());
    for (const auto& p : plist) {
      w.u32(p.doc);
      w.u32(p.tf);
    }
  }
  return w.take();
}

PostingsIndex PostingsIndex::deserialize(std::string_view bytes) {
  detail::Reader r(bytes, "index");
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error("not a regir index file");
  if (auto v = r.u32(); v != kFormatVersion)
    throw Error("index format version " + std::to_string(v) + " unsupported (expected " + std::to_string(kFormatVersion) + ")");
  PostingsIndex idx;
  const bool idf_filter = r.u32() != 0;
  std::vector<std::string> stop(r.u64());
  for (auto& s : stop) s = r.str();
  const auto doc_count = r.u64();
  const double avg_stop = r.f64();
  std::unordered_map<std::string, std::uint32_t> df;
  const auto df_size = r.u64();
  df.reserve(df_size);
  for (std::uint64_t i = 0; i < df_size; ++i) {
    auto t = r.str();
    df.emplace(std::move(t), r.u32());
  }
  idx.pipeline_ = TextPipeline(StopwordList(std::move(stop)), IdfTable::from_stats(doc_count, std::move(df), avg_stop), idf_filter);
  const auto n = r.u64();
  idx.doc_ids_.resize(n);
  idx.doc_len_.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    idx.doc_ids_[i] = r.str();
    idx.doc_len_[i] = r.u32();
  }
  const auto vocab = r.u64();
  idx.postings_.resize(vocab);
  for (std::uint64_t t = 0; t < vocab; ++t) {
    idx.term_ids_.emplace(r.str(), static_cast<std::uint32_t>(t));
    auto& plist = idx.postings_[t];
    plist.resize(r.u64());
    for (auto& p : plist) {
      p.doc = r.u32();
      p.tf = r.u32();
      if (p.doc >= n) throw Error("index file corrupt: posting references document " + std::to_string(p.doc));
    }
  }
  if (!r.done()) throw Error("index file has trailing bytes");
  idx.finalize();
  return idx;
}

void PostingsIndex::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

PostingsIndex PostingsIndex::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void Bm25Grid::write_csv(std::ostream& out, const std::string& manifest_hash) const {
  if (!manifest_hash.empty()) out << "# manifest " << manifest_hash << '\n';
  out << "# k=" << k << '\n';
  out << "k1,b,recall_at_k\n";
  for (std::size_t i = 0; i < k1_values.size(); ++i)
    for (std::size_t j = 0; j < b_values.size(); ++j)
      out << format_double(k1_values[i]) << ',' << format_double(b_values[j]) << ',' << std::fixed
          << std::setprecision(6) << at(i, j) << std::defaultfloat << '\n';
}

Bm25Grid Bm25Grid::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Bm25Grid g;
  std::map<std::pair<double, double>, double> cells;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t.rfind("# k=", 0) == 0) g.k = std::stoul(std::string(t.substr(4)));
      continue;
    }
    if (!header) {
      if (t != "k1,b,recall_at_k") throw ParseError(path.string(), line_no, "unexpected header");
      header = true;
      continue;
    }
    auto cols = split(t, ',');
    if (cols.size() != 3) throw ParseError(path.string(), line_no, "expected k1,b,recall_at_k");
    cells[{std::stod(cols[0]), std::stod(cols[1])}] = std::stod(cols[2]);
  }
  for (const auto& [key, _] : cells) {
    if (std::find(g.k1_values.begin(), g.k1_values.end(), key.first) == g.k1_values.end()) g.k1_values.push_back(key.first);
    if (std::find(g.b_values.begin(), g.b_values.end(), key.second) == g.b_values.end()) g.b_values.push_back(key.second);
  }
  std::sort(g.k1_values.begin(), g.k1_values.end());
  std::sort(g.b_values.begin(), g.b_values.end());
  for (double k1 : g.k1_values)
    for (double b : g.b_values) {
      auto it = cells.find({k1, b});
      if (it == cells.end()) throw Error(path.string() + ": grid is not rectangular");
      g.recall.push_back(it->second);
    }
  return g;
}

std::vector<double> default_k1_grid() { return make_range(0.5, 8.0, 0.5); }
std::vector<double> default_b_grid() { return make_range(0.0, 1.0, 0.1); }

Bm25TuneResult tune_bm25(const PostingsIndex& index, std::span<const QueryInput> queries, const Qrels& qrels,
                         const std::vector<double>& k1_grid, const std::vector<double>& b_grid, std::size_t k) {
  if (k1_grid.empty() || b_grid.empty()) throw Error("tune_bm25: empty grid");
  for (double k1 : k1_grid)
    for (double b : b_grid) Bm25Params{k1, b}.validate();

  std::vector<const QueryInput*> judged;
  for (const auto& q : queries)
    if (!qrels.relevant(q.id).empty()) judged.push_back(&q);

  Bm25TuneResult result;
  result.grid.k1_values = k1_grid;
  result.grid.b_values = b_grid;
  result.grid.k = k;
  const std::size_t cells = k1_grid.size() * b_grid.size();
  // Per-query recall for every cell; queries are the parallel axis so each
  // worker reuses one matched-term list and one score buffer.
  std::vector<std::vector<double>> per_query(judged.size(), std::vector<double>(cells, 0.0));
  parallel_for(judged.size(), [&](std::size_t qi) {
    const auto& q = *judged[qi];
    const auto& rel = qrels.relevant(q.id);
    auto matched = index.match(q.tokens);
    std::vector<double> scores(index.doc_count());
    for (std::size_t i = 0; i < k1_grid.size(); ++i)
      for (std::size_t j = 0; j < b_grid.size(); ++j) {
        index.accumulate(matched, {k1_grid[i], b_grid[j]}, scores);
        per_query[qi][i * b_grid.size() + j] = recall_at_k(index.rank(q.id, scores, k), rel, k);
      }
  });
  result.grid.recall.assign(cells, 0.0);
  for (const auto& row : per_query)
    for (std::size_t c = 0; c < cells; ++c) result.grid.recall[c] += row[c];
  if (!judged.empty())
    for (auto& v : result.grid.recall) v /= static_cast<double>(judged.size());

  // Ties go to smaller k1, then smaller b, independent of grid order.
  bool have = false;
  for (std::size_t i = 0; i < k1_grid.size(); ++i)
    for (std::size_t j = 0; j < b_grid.size(); ++j) {
      const double r = result.grid.at(i, j);
      const Bm25Params p{k1_grid[i], b_grid[j]};
      const bool better = !have || r > result.best_recall ||
                          (r == result.best_recall &&
                           (p.k1 < result.best.k1 || (p.k1 == result.best.k1 && p.b < result.best.b)));
      if (better) {
        result.best = p;
        result.best_recall = r;
        have = true;
      }
    }
  return result;
}

bool in_textbook_range(const Bm25Params& p) { return p.k1 >= 0.5 && p.k1 <= 2.0 && p.b >= 0.3 && p.b <= 0.9; }

std::vector<QueryInput> prepare_queries(const Collection& queries, const std::vector<std::string>& ids,
                                        const TextPipeline& pipeline) {
  std::vector<QueryInput> out(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    out[i].id = ids[i];
    out[i].tokens = pipeline.process(queries.at(ids[i]).full_text());
  });
  return out;
}

}  // namespace regir
