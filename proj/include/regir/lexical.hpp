#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/ranked_list.hpp"
#include "regir/text.hpp"

namespace regir {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  /// k1 >= 0, 0 <= b <= 1.
  void validate() const;
};

struct Posting {
  std::uint32_t doc = 0;  // dense document index
  std::uint32_t tf = 0;
};

/// A query after the text pipeline.
struct QueryInput {
  std::string id;
  TokenList tokens;
};

/// Okapi BM25 over an inverted index of denoised pool documents:
///   score(q, d) = sum_i idf(q_i) * tf(q_i,d) * (k1 + 1) / (tf(q_i,d) + k1 * (1 - b + b * L / avg_L))
/// Query terms are a bag; a term repeated n times contributes n times. Terms
/// absent from the index contribute nothing.
class PostingsIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  PostingsIndex() = default;

  /// Documents must already be processed by `pipeline`; its idf table must be
  /// the table whose df the postings reproduce.
  PostingsIndex(std::vector<std::string> doc_ids, std::span<const TokenList> docs, TextPipeline pipeline);

  /// Tokenize pool -> fit pool-side idf -> denoise -> index.
  static PostingsIndex build(const Collection& pool, StopwordList stopwords, bool idf_filter = true);

  double score(const TokenList& query, std::string_view doc_id, const Bm25Params& params) const;
  /// Top-k by score, ties broken by ascending doc_id; length min(k, pool size).
  RankedList search(const QueryInput& query, const Bm25Params& params, std::size_t k) const;

  const TextPipeline& pipeline() const { return pipeline_; }
  const IdfTable& idf() const { return pipeline_.idf(); }
  std::size_t doc_count() const { return doc_ids_.size(); }
  double avg_len() const { return avg_len_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::uint32_t doc_len(std::string_view doc_id) const;
  /// Postings of a term (empty if absent), sorted by document index.
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t vocabulary_size() const { return term_ids_.size(); }
  /// Sorted vocabulary.
  std::vector<std::string> terms() const;
  std::uint32_t doc_index(std::string_view doc_id) const;

  /// Versioned binary format; byte-identical for identical inputs.
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static PostingsIndex load(const std::filesystem::path& path);
  static PostingsIndex deserialize(std::string_view bytes);

  /// Per-query matching data reused across parameter settings.
  struct MatchedTerm {
    double idf = 0.0;
    double query_tf = 0.0;
    std::span<const Posting> postings;
  };
  std::vector<MatchedTerm> match(const TokenList& query) const;
  /// Score accumulation into `scores` (size doc_count) for a matched query.
  void accumulate(std::span<const MatchedTerm> matched, const Bm25Params& params, std::span<double> scores) const;
  RankedList rank(const std::string& query_id, std::span<const double> scores, std::size_t k) const;

 private:
  void finalize();

  TextPipeline pipeline_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::uint32_t> doc_index_;
  std::vector<std::uint32_t> doc_len_;
  double avg_len_ = 0.0;
  std::unordered_map<std::string, std::uint32_t> term_ids_;
  std::vector<std::vector<Posting>> postings_;
};

struct Bm25Grid {
  std::vector<double> k1_values;
  std::vector<double> b_values;
  std::vector<double> recall;  // k1-major: recall[i * b_values.size() + j]
  std::size_t k = 100;

  double at(std::size_t i, std::size_t j) const { return recall[i * b_values.size() + j]; }
  /// `k1,b,recall_at_k`
  void write_csv(std::ostream& out, const std::string& manifest_hash = {}) const;
  static Bm25Grid read_csv(const std::filesystem::path& path);
};

struct Bm25TuneResult {
  Bm25Params best;
  double best_recall = 0.0;
  Bm25Grid grid;
};

/// 0.5, 1.0, ..., 8.0
std::vector<double> default_k1_grid();
/// 0.0, 0.1, ..., 1.0
std::vector<double> default_b_grid();

/// Mean R@k for every (k1, b) cell; argmax with ties to smaller k1, then smaller b.
Bm25TuneResult tune_bm25(const PostingsIndex& index, std::span<const QueryInput> queries, const Qrels& qrels,
                         const std::vector<double>& k1_grid, const std::vector<double>& b_grid, std::size_t k);

/// Whether (k1, b) lies in the textbook box k1 in [0.5, 2], b in [0.3, 0.9].
bool in_textbook_range(const Bm25Params& p);

/// Processes query documents with the index's pipeline.
std::vector<QueryInput> prepare_queries(const Collection& queries, const std::vector<std::string>& ids,
                                        const TextPipeline& pipeline);

}  // namespace regir
