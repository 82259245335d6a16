#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace regir {

enum class CollectionTag { EU, UK };

CollectionTag parse_collection_tag(std::string_view s);
std::string_view to_string(CollectionTag tag);

/// One legal act. Recitals and main body are concatenated into `body`.
struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
  int year = 0;  // 0 = unknown, exempt from date filtering
  CollectionTag tag = CollectionTag::EU;

  /// Title and body joined, the text every retrieval stage consumes.
  std::string full_text() const { return body.empty() ? title : title + "\n" + body; }
};

/// Year from an explicit field, else the first 19xx/20xx token in the title, else 0.
int resolve_year(std::optional<int> explicit_year, std::string_view title);

/// Immutable after construction; safe for concurrent reads.
class Collection {
 public:
  Collection() = default;
  /// Validates ids, titles and years. Throws Error naming the offending document.
  Collection(CollectionTag tag, std::vector<Document> docs);

  CollectionTag tag() const { return tag_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& documents() const { return docs_; }
  auto begin() const { return docs_.begin(); }
  auto end() const { return docs_.end(); }

  const Document* find(std::string_view doc_id) const;
  /// Throws Error for unknown ids.
  const Document& at(std::string_view doc_id) const;
  bool contains(std::string_view doc_id) const { return find(doc_id) != nullptr; }
  /// Year of a document, 0 when unknown or absent.
  int year_of(std::string_view doc_id) const;

  /// Documents whose body is empty (allowed but flagged).
  std::size_t degenerate_count() const;

  /// Subset in the given id order; every id must exist.
  Collection subset(const std::vector<std::string>& ids) const;

 private:
  CollectionTag tag_ = CollectionTag::EU;
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads canonical JSON-lines: required `doc_id`, `title`, `body`; optional `year`.
/// Aborts with the line number on malformed lines, missing fields or duplicates.
Collection ingest_collection(const std::filesystem::path& path, CollectionTag tag);
/// Canonical JSONL writer (ingest(serialize(c)) == c).
void write_collection(const Collection& collection, const std::filesystem::path& path);

struct CorpusStats {
  std::size_t doc_count = 0;
  double mean_tokens = 0.0;    // whitespace tokens of title + body
  double median_tokens = 0.0;
  std::size_t empty_body_count = 0;
  std::size_t unknown_year_count = 0;
  std::map<int, std::size_t> year_histogram;
};

CorpusStats corpus_stats(const Collection& collection);
std::string to_json(const CorpusStats& stats);

using RelevantSet = std::set<std::string>;

/// query id -> relevant pool ids (transposition links).
class Qrels {
 public:
  Qrels() = default;
  explicit Qrels(std::map<std::string, RelevantSet> entries) : entries_(std::move(entries)) {}

  /// Empty set for queries without judgments.
  const RelevantSet& relevant(std::string_view query_id) const;
  bool has(std::string_view query_id) const;
  void add(const std::string& query_id, const std::string& doc_id) { entries_[query_id].insert(doc_id); }
  const std::map<std::string, RelevantSet>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Mean relevant-set size over the given queries.
  double mean_relevant(const std::vector<std::string>& query_ids) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, RelevantSet> entries_;
};

/// TSV `query_id<TAB>doc_id`, '#' comments ignored. Unknown ids are collected and
/// reported together. Pass nullptr collections to skip id validation.
Qrels load_qrels(const std::filesystem::path& path, const Collection* queries, const Collection* pool);

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
  std::vector<std::string> pool;

  const std::vector<std::string>& split(std::string_view name) const;
};

SplitManifest load_split_manifest(const std::filesystem::path& path);
void save_split_manifest(const SplitManifest& manifest, const std::filesystem::path& path);

/// Throws on overlapping query splits or unknown ids. Returns warnings for
/// chronology violations and queries with no relevant documents.
std::vector<std::string> validate_split(const SplitManifest& manifest, const Collection& queries,
                                        const Collection& pool, const Qrels& qrels);

/// Key aliases used when converting released archives into canonical JSONL.
struct ConvertOptions {
  std::vector<std::string> id_keys{"doc_id", "celex_id", "id", "document_id", "uk_id"};
  std::vector<std::string> title_keys{"title", "header"};
  std::vector<std::string> body_keys{"body", "recitals", "main_body", "text", "content"};
  std::vector<std::string> year_keys{"year", "publication_year", "date", "publication_date"};
  std::vector<std::string> relevant_keys{"relevant_documents", "relevant_doc_ids", "relevant", "transpositions"};
};

/// Accepts a JSON array, JSON-lines, or a directory of .json/.jsonl files and
/// maps aliased keys onto the canonical schema. List-valued body fields are
/// joined with newlines; all present body keys are concatenated in order.
std::vector<Document> convert_records(const std::filesystem::path& path, CollectionTag tag,
                                      const ConvertOptions& options = {});
/// Relevance links carried inside query records (alias keys above).
Qrels convert_relevance(const std::filesystem::path& path, const ConvertOptions& options = {});

}  // namespace regir
