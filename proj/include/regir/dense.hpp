#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/ranked_list.hpp"
#include "regir/text.hpp"
#include "regir/util.hpp"

namespace regir {

/// Row-major table of float vectors keyed by string (terms or doc ids).
class VectorTable {
 public:
  VectorTable() = default;
  explicit VectorTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  const std::vector<std::string>& keys() const { return keys_; }

  /// Throws on duplicate key or wrong length.
  void add(std::string key, std::span<const double> v);
  void add(std::string key, std::span<const float> v);
  /// nullptr if absent.
  const float* find(std::string_view key) const;
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  double norm(std::size_t i) const { return norms_[i]; }
  std::optional<std::size_t> index_of(std::string_view key) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Text format: `key v1 ... vdim` per line. A leading word2vec header
/// `count dim` is skipped; doc-vector files may open with `#dim D #tag STRING`.
struct VectorFile {
  VectorTable table;
  std::string tag;
};
VectorFile load_vector_file(const std::filesystem::path& path);
void save_vector_file(const VectorTable& table, const std::string& tag, const std::filesystem::path& path);

/// Pre-trained word embeddings (trained elsewhere).
class WordVectors {
 public:
  WordVectors() = default;
  explicit WordVectors(VectorTable table) : table_(std::move(table)) {}
  static WordVectors load(const std::filesystem::path& path);

  std::size_t dim() const { return table_.dim(); }
  std::size_t size() const { return table_.size(); }
  const float* find(std::string_view term) const { return table_.find(term); }
  bool contains(std::string_view term) const { return find(term) != nullptr; }
  const VectorTable& table() const { return table_; }

 private:
  VectorTable table_;
};

/// Per-document vectors produced upstream (any model or layer); `provenance`
/// records which.
class DocVectorStore {
 public:
  DocVectorStore() = default;
  DocVectorStore(VectorTable table, std::string provenance)
      : table_(std::move(table)), provenance_(std::move(provenance)) {}
  static DocVectorStore load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const { save_vector_file(table_, provenance_, path); }

  std::size_t dim() const { return table_.dim(); }
  std::size_t size() const { return table_.size(); }
  const VectorTable& table() const { return table_; }
  const std::string& provenance() const { return provenance_; }
  const float* find(std::string_view doc_id) const { return table_.find(doc_id); }

  /// Throws listing ids absent from the collection.
  void validate_against(const Collection& collection) const;

 private:
  VectorTable table_;
  std::string provenance_;
};

enum class ZeroVectorPolicy { Error, SkipDocument };

/// Thrown when a text has no in-vocabulary term with positive weight.
class EmptyCentroidError : public Error {
 public:
  using Error::Error;
};

/// tf-idf weighted centroid over distinct in-vocabulary terms:
///   cent(t) = sum_x vec(x) * tf(x,t) * idf(x) / sum_x tf(x,t) * idf(x)
std::vector<double> centroid(const TokenList& tokens, const WordVectors& vectors, const IdfTable& idf);

/// Exact cosine kNN over the whole store, descending similarity with ties by
/// ascending doc_id. Zero-norm stored vectors get similarity -1.
RankedList knn_search(std::span<const double> query, const DocVectorStore& store, std::size_t k,
                      const std::string& query_id = {}, const std::string& stage = "dense");

/// Pool centroids computed once; queries embedded on the fly.
class CentroidPrefetcher {
 public:
  CentroidPrefetcher(const WordVectors& vectors, const IdfTable& idf, ZeroVectorPolicy policy = ZeroVectorPolicy::SkipDocument)
      : vectors_(&vectors), idf_(&idf), policy_(policy) {}

  /// Builds the pool-side store from processed pool documents.
  void index(const std::vector<std::string>& doc_ids, std::span<const TokenList> docs);
  const DocVectorStore& store() const { return store_; }
  std::size_t skipped() const { return skipped_; }

  RankedList search(const std::string& query_id, const TokenList& query_tokens, std::size_t k) const;

 private:
  const WordVectors* vectors_;
  const IdfTable* idf_;
  ZeroVectorPolicy policy_;
  DocVectorStore store_;
  std::size_t skipped_ = 0;
};

/// Looks up precomputed query vectors and searches the pool-side store.
class DocVectorPrefetcher {
 public:
  DocVectorPrefetcher(DocVectorStore queries, DocVectorStore pool);

  RankedList search(const std::string& query_id, std::size_t k) const;
  const DocVectorStore& pool() const { return pool_; }
  const DocVectorStore& queries() const { return queries_; }

 private:
  DocVectorStore queries_;
  DocVectorStore pool_;
};

}  // namespace regir
