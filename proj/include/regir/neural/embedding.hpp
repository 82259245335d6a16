#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "regir/dense.hpp"
#include "regir/text.hpp"

namespace regir::neural {

/// Retained tokens of one text with unit-normalized embeddings (one row each).
/// Tokens without an embedding are dropped.
struct TokenMatrix {
  std::vector<std::string> terms;
  Eigen::MatrixXd vectors;

  std::size_t size() const { return terms.size(); }
};

class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual std::size_t dim() const = 0;
  /// `doc_id` identifies the text for contextual sources; `tokens` are the
  /// processed tokens for static ones.
  virtual TokenMatrix embed(const std::string& doc_id, const TokenList& tokens) const = 0;
};

/// Static word vectors; out-of-vocabulary tokens are skipped.
class WordVectorEmbedder final : public TokenEmbedder {
 public:
  explicit WordVectorEmbedder(const WordVectors& vectors) : vectors_(&vectors) {}
  std::size_t dim() const override { return vectors_->dim(); }
  TokenMatrix embed(const std::string& doc_id, const TokenList& tokens) const override;

 private:
  const WordVectors* vectors_;
};

/// Frozen contextual token vectors produced upstream, one line per token:
/// `doc_id token_index token v1 ... vdim`.
class ContextualVectorStore {
 public:
  static ContextualVectorStore load(const std::filesystem::path& path);
  std::size_t dim() const { return dim_; }
  bool contains(const std::string& doc_id) const { return docs_.count(doc_id) != 0; }
  /// Throws for unknown documents.
  const TokenMatrix& at(const std::string& doc_id) const;
  std::size_t size() const { return docs_.size(); }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, TokenMatrix> docs_;
};

class ContextualEmbedder final : public TokenEmbedder {
 public:
  explicit ContextualEmbedder(const ContextualVectorStore& store) : store_(&store) {}
  std::size_t dim() const override { return store_->dim(); }
  TokenMatrix embed(const std::string& doc_id, const TokenList& tokens) const override;

 private:
  const ContextualVectorStore* store_;
};

/// Cosine similarities of every (query token, document token) pair. Pairs of
/// identical terms are exactly 1.
Eigen::MatrixXd similarity_matrix(const TokenMatrix& query, const TokenMatrix& doc);

/// Normalizes rows in place; zero rows stay zero.
void normalize_rows(Eigen::MatrixXd& m);

}  // namespace regir::neural
