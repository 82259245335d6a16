#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace regir {

using TokenList = std::vector<std::string>;

/// Lowercases, folds Latin diacritics to ASCII and splits on whitespace and
/// punctuation (hyphens and slashes included). All-digit tokens are dropped.
/// Stop-words are kept; they go in denoise().
TokenList tokenize(std::string_view text);

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::vector<std::string> words);

  /// Built-in English list (~320 words).
  static StopwordList english();
  /// UTF-8 text, one word per line. Blank lines and '#' comments skipped.
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view word) const { return set_.count(std::string(word)) != 0; }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;  // sorted, unique
  std::unordered_set<std::string> set_;
};

/// Document frequencies over a collection with the smoothed BM25 idf
///   idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)
/// which is non-negative for every df in [0, N].
class IdfTable {
 public:
  IdfTable() = default;

  /// Throws if docs is empty.
  static IdfTable build(std::span<const TokenList> docs, const StopwordList& stopwords);
  /// Rebuilds from stored statistics (index deserialization).
  static IdfTable from_stats(std::size_t doc_count, std::unordered_map<std::string, std::uint32_t> df,
                             double stopword_avg_idf);

  double idf(std::string_view term) const;
  /// Same formula evaluated for an arbitrary df.
  double idf_for_df(std::uint32_t df) const;
  std::uint32_t df(std::string_view term) const;

  std::size_t doc_count() const { return doc_count_; }
  /// Mean idf over the stop-words that occur in the collection (0 if none do).
  double stopword_avg_idf() const { return stopword_avg_idf_; }
  const std::unordered_map<std::string, std::uint32_t>& doc_freqs() const { return df_; }

 private:
  std::size_t doc_count_ = 0;
  std::unordered_map<std::string, std::uint32_t> df_;
  double stopword_avg_idf_ = 0.0;
};

/// Removes stop-words, then (when idf_filter is set) every token whose idf is
/// below the table's average stop-word idf. Survivor order and duplicates kept.
TokenList denoise(const TokenList& tokens, const IdfTable& idf, const StopwordList& stopwords,
                  bool idf_filter = true);

/// Tokenize + denoise with a fixed pool-side idf table, applied identically to
/// queries and pool documents.
class TextPipeline {
 public:
  TextPipeline() = default;
  TextPipeline(StopwordList stopwords, IdfTable idf, bool idf_filter)
      : stopwords_(std::move(stopwords)), idf_(std::move(idf)), idf_filter_(idf_filter) {}

  /// Builds the pool-side table from already tokenized pool documents.
  static TextPipeline fit(std::span<const TokenList> pool_tokens, StopwordList stopwords, bool idf_filter);

  TokenList process(std::string_view text) const { return denoise(tokenize(text), idf_, stopwords_, idf_filter_); }
  TokenList process_tokens(const TokenList& tokens) const { return denoise(tokens, idf_, stopwords_, idf_filter_); }

  const StopwordList& stopwords() const { return stopwords_; }
  const IdfTable& idf() const { return idf_; }
  bool idf_filter() const { return idf_filter_; }

 private:
  StopwordList stopwords_;
  IdfTable idf_;
  bool idf_filter_ = true;
};

}  // namespace regir
