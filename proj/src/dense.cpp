#include "regir/dense.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "regir/util.hpp"

namespace regir {

namespace {

template <class T>
double squared_norm(std::span<const T> v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return s;
}

bool parse_float(std::string_view s, float& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

void VectorTable::add(std::string key, std::span<const float> v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_ || dim_ == 0)
    throw Error("vector for '" + key + "' has length " + std::to_string(v.size()) + ", expected " + std::to_string(dim_));
  if (!index_.emplace(key, keys_.size()).second) throw Error("duplicate vector key '" + key + "'");
  keys_.push_back(std::move(key));
  data_.insert(data_.end(), v.begin(), v.end());
  norms_.push_back(std::sqrt(squared_norm(v)));
}

void VectorTable::add(std::string key, std::span<const double> v) {
  std::vector<float> f(v.begin(), v.end());
  add(std::move(key), std::span<const float>(f));
}

const float* VectorTable::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  return it == index_.end() ? nullptr : data_.data() + it->second * dim_;
}

std::optional<std::size_t> VectorTable::index_of(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VectorFile load_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vector file " + path.string());
  VectorFile vf;
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared_dim = 0;
  std::vector<float> buf;
  const auto src = path.string();
  while (std::getline(in, line)) {
    ++line_no;
    auto f = fields(line);
    if (f.empty()) continue;
    if (f.front().starts_with("#")) {
      for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        if (f[i] == "#dim") declared_dim = std::stoul(std::string(f[i + 1]));
        if (f[i] == "#tag") {
          auto pos = line.find("#tag");
          vf.tag = std::string(trim(std::string_view(line).substr(pos + 4)));
        }
      }
      continue;
    }
    if (vf.table.empty() && declared_dim == 0 && f.size() == 2 && all_digits(f[0]) && all_digits(f[1])) continue;
    if (f.size() < 2) throw ParseError(src, line_no, "expected key followed by vector components");
    buf.resize(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i)
      if (!parse_float(f[i], buf[i - 1])) throw ParseError(src, line_no, "bad number '" + std::string(f[i]) + "'");
    const std::size_t expected = vf.table.dim() ? vf.table.dim() : declared_dim;
    if (expected && buf.size() != expected)
      throw ParseError(src, line_no,
                       "inconsistent dimensionality: " + std::to_string(buf.size()) + " values, expected " + std::to_string(expected));
    try {
      vf.table.add(std::string(f[0]), std::span<const float>(buf));
    } catch (const Error& e) {
      throw ParseError(src, line_no, e.what());
    }
  }
  if (vf.table.empty()) throw Error("vector file " + src + " is empty");
  return vf;
}

void save_vector_file(const VectorTable& table, const std::string& tag, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "#dim " << table.dim();
  if (!tag.empty()) out << " #tag " << tag;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.keys()[i];
    for (float v : table.row(i)) out << ' ' << format_double(static_cast<double>(v));
    out << '\n';
  }
  write_file(path, out.str());
}

WordVectors WordVectors::load(const std::filesystem::path& path) { return WordVectors(load_vector_file(path).table); }

DocVectorStore DocVectorStore::load(const std::filesystem::path& path) {
  auto vf = load_vector_file(path);
  return DocVectorStore(std::move(vf.table), std::move(vf.tag));
}

void DocVectorStore::validate_against(const Collection& collection) const {
  std::vector<std::string> missing;
  for (const auto& id : table_.keys())
    if (!collection.contains(id)) missing.push_back(id);
  if (missing.empty()) return;
  std::string msg = std::to_string(missing.size()) + " vector id(s) not in the collection:";
  for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
  throw Error(msg);
}

std::vector<double> centroid(const TokenList& tokens, const WordVectors& vectors, const IdfTable& idf) {
  std::map<std::string_view, double> tf;
  for (const auto& t : tokens)
    if (vectors.contains(t)) tf[t] += 1.0;
  if (tf.empty()) throw EmptyCentroidError("no in-vocabulary tokens");
  std::vector<std::pair<const float*, double>> weighted;
  double weight_total = 0.0;
  for (const auto& [term, count] : tf) {
    const double w = count * idf.idf(term);
    if (w == 0.0) continue;
    weighted.emplace_back(vectors.find(term), w);
    weight_total += w;
  }
  if (weight_total == 0.0) throw EmptyCentroidError("tf-idf weights sum to zero");
  // Normalizing the weights first keeps single-term and equal-weight cases exact.
  std::vector<double> sum(vectors.dim(), 0.0);
  for (const auto& [v, w] : weighted) {
    const double share = w / weight_total;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += share * static_cast<double>(v[i]);
  }
  return sum;
}

RankedList knn_search(std::span<const double> query, const DocVectorStore& store, std::size_t k,
                      const std::string& query_id, const std::string& stage) {
  if (k == 0) throw Error("k must be >= 1");
  if (query.size() != store.dim())
    throw Error("query vector has dimension " + std::to_string(query.size()) + ", store has " + std::to_string(store.dim()));
  const double qnorm = std::sqrt(squared_norm(query));
  if (qnorm == 0.0) throw Error("zero query vector");
  const auto& table = store.table();
  std::vector<ScoredDoc> entries(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    double sim = -1.0;
    if (table.norm(i) > 0.0) {
      auto row = table.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) dot += static_cast<double>(row[j]) * query[j];
      sim = dot / (qnorm * table.norm(i));
    }
    entries[i] = {table.keys()[i], sim, stage};
  }
  select_top_k(entries, k);
  return RankedList{query_id, std::move(entries)};
}

void CentroidPrefetcher::index(const std::vector<std::string>& doc_ids, std::span<const TokenList> docs) {
  VectorTable table(vectors_->dim());
  skipped_ = 0;
  std::vector<std::optional<std::vector<double>>> cents(docs.size());
  parallel_for(docs.size(), [&](std::size_t i) {
    try {
      cents[i] = centroid(docs[i], *vectors_, *idf_);
    } catch (const EmptyCentroidError& e) {
      if (policy_ == ZeroVectorPolicy::Error) throw Error("document '" + doc_ids[i] + "': " + e.what());
    }
  });
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!cents[i]) {
      ++skipped_;
      continue;
    }
    table.add(doc_ids[i], std::span<const double>(*cents[i]));
  }
  if (skipped_) spdlog::warn("w2v-cent: skipped {} document(s) without in-vocabulary terms", skipped_);
  store_ = DocVectorStore(std::move(table), "w2v-cent");
}

RankedList CentroidPrefetcher::search(const std::string& query_id, const TokenList& query_tokens, std::size_t k) const {
  return knn_search(centroid(query_tokens, *vectors_, *idf_), store_, k, query_id, "w2v-cent");
}

DocVectorPrefetcher::DocVectorPrefetcher(DocVectorStore queries, DocVectorStore pool)
    : queries_(std::move(queries)), pool_(std::move(pool)) {
  if (queries_.dim() != pool_.dim())
    throw Error("query vectors have dimension " + std::to_string(queries_.dim()) + ", pool vectors " +
                std::to_string(pool_.dim()));
}

RankedList DocVectorPrefetcher::search(const std::string& query_id, std::size_t k) const {
  const float* q = queries_.find(query_id);
  if (!q) throw Error("no query vector for '" + query_id + "'");
  std::vector<double> v(q, q + queries_.dim());
  return knn_search(v, pool_, k, query_id, "doc-vectors");
}

}  // namespace regir
