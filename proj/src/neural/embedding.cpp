#include "regir/neural/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "regir/util.hpp"

namespace regir::neural {

void normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
}

TokenMatrix WordVectorEmbedder::embed(const std::string&, const TokenList& tokens) const {
  TokenMatrix out;
  std::vector<const float*> rows;
  for (const auto& t : tokens) {
    if (const float* v = vectors_->find(t)) {
      out.terms.push_back(t);
      rows.push_back(v);
    }
  }
  const auto dim = static_cast<Eigen::Index>(vectors_->dim());
  out.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j) out.vectors(static_cast<Eigen::Index>(i), j) = rows[i][j];
  normalize_rows(out.vectors);
  return out;
}

ContextualVectorStore ContextualVectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open contextual vector file " + path.string());
  ContextualVectorStore store;
  // doc -> index -> (token, vector)
  std::map<std::string, std::map<long, std::pair<std::string, std::vector<double>>>> staged;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ls{std::string(t)};
    std::string doc, token;
    long index = 0;
    if (!(ls >> doc >> index >> token)) throw ParseError(path.string(), line_no, "expected doc_id token_index token v1 ... vdim");
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw ParseError(path.string(), line_no, "bad vector component");
    if (v.empty()) throw ParseError(path.string(), line_no, "missing vector components");
    if (store.dim_ == 0) store.dim_ = v.size();
    if (v.size() != store.dim_)
      throw ParseError(path.string(), line_no,
                       "inconsistent dimensionality: " + std::to_string(v.size()) + " values, expected " + std::to_string(store.dim_));
    if (!staged[doc].emplace(index, std::make_pair(token, std::move(v))).second)
      throw ParseError(path.string(), line_no, "duplicate token index " + std::to_string(index) + " for '" + doc + "'");
  }
  if (staged.empty()) throw Error("contextual vector file " + path.string() + " is empty");
  for (auto& [doc, tokens] : staged) {
    TokenMatrix m;
    m.vectors.resize(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(store.dim_));
    Eigen::Index r = 0;
    for (auto& [_, tv] : tokens) {
      m.terms.push_back(tv.first);
      m.vectors.row(r++) = Eigen::Map<const Eigen::RowVectorXd>(tv.second.data(), static_cast<Eigen::Index>(tv.second.size()));
    }
    normalize_rows(m.vectors);
    store.docs_.emplace(doc, std::move(m));
  }
  return store;
}

const TokenMatrix& ContextualVectorStore::at(const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  if (it == docs_.end()) throw Error("no contextual vectors for '" + doc_id + "'");
  return it->second;
}

TokenMatrix ContextualEmbedder::embed(const std::string& doc_id, const TokenList&) const { return store_->at(doc_id); }

Eigen::MatrixXd similarity_matrix(const TokenMatrix& query, const TokenMatrix& doc) {
  Eigen::MatrixXd s = (query.vectors * doc.vectors.transpose()).cwiseMax(-1.0).cwiseMin(1.0);
  std::unordered_map<std::string_view, std::vector<Eigen::Index>> query_rows;
  for (std::size_t i = 0; i < query.terms.size(); ++i) query_rows[query.terms[i]].push_back(static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < doc.terms.size(); ++j) {
    auto it = query_rows.find(doc.terms[j]);
    if (it == query_rows.end()) continue;
    for (auto i : it->second) s(i, static_cast<Eigen::Index>(j)) = 1.0;
  }
  return s;
}

}  // namespace regir::neural
