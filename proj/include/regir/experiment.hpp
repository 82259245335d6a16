#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/eval.hpp"
#include "regir/kv_config.hpp"
#include "regir/lexical.hpp"
#include "regir/neural/reranker.hpp"
#include "regir/temporal.hpp"

namespace regir {

std::string_view version();

enum class Task { EU2UK, UK2EU };
Task parse_task(std::string_view s);
std::string_view to_string(Task task);
/// Collection tags of the (queries, pool) sides.
std::pair<CollectionTag, CollectionTag> task_tags(Task task);

enum class PrefetchMode { Bm25, W2vCentroid, DocVectors, Ensemble };
PrefetchMode parse_prefetch_mode(std::string_view s);
std::string_view to_string(PrefetchMode mode);

/// Flat key=value experiment description. Relative paths resolve against the
/// config file's directory.
struct ExperimentConfig {
  KvConfig raw;
  std::filesystem::path base_dir;

  Task task = Task::EU2UK;
  std::filesystem::path queries, pool, qrels, splits;

  std::string stopwords = "english";  // "english" or a path
  bool idf_filter = true;

  PrefetchMode prefetch = PrefetchMode::Bm25;
  std::size_t k = 100;

  Bm25Params bm25;
  bool tune_bm25 = false;
  std::vector<double> k1_grid, b_grid;

  std::filesystem::path word_vectors, query_vectors, pool_vectors;

  std::string fusion_component = "auto";  // doc-vectors, w2v-cent or auto
  double alpha = 0.5;
  bool tune_alpha = false;
  std::vector<double> alpha_grid;

  std::optional<neural::ModelKind> reranker;
  neural::Hyperparams hyperparams;
  int seeds = 3;
  std::string rerank_embeddings = "word";  // word or contextual
  std::filesystem::path contextual_vectors;

  std::uint64_t seed = 0;

  std::optional<int> filter_years;  // set when a window is fixed
  bool tune_filter = false;
  std::vector<int> filter_grid{1, 2, 3, 5, 10, 15, 20};
  FilterMode filter_mode = FilterMode::Post;
  std::size_t filter_depth = 0;  // deep list for pre-filtering, 0 = 2k

  std::size_t k_max = 0;  // R@k curve depth, 0 = k
  std::filesystem::path output_dir;

  bool has_filter() const { return filter_years.has_value() || tune_filter; }
  static ExperimentConfig from_kv(const KvConfig& kv, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Resource paths exist, k >= 1, seeds >= 1 with a reranker, required resources present.
  void validate() const;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
  bool cached = false;
};

struct RunManifest {
  std::string version;
  std::string config;                               // canonical config dump
  std::map<std::string, std::string> resources;     // path -> sha256
  std::map<std::string, std::string> outputs;       // relative path -> sha256
  std::vector<StageTiming> timings;
  std::string hash;                                 // sha256 over version, config and resources

  std::string to_json() const;
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

/// Thrown when an experiment stage fails; names the stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what) : Error("stage '" + stage + "' failed: " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// ingest -> index -> tune -> prefetch -> (train -> rerank) -> filter -> evaluate.
/// Writes every artifact into config.output_dir and returns the manifest.
/// Expensive stages are skipped when their upstream hashes are unchanged.
RunManifest run_experiment(const ExperimentConfig& config);

/// `k,recall` for k = 1..k_max over the given queries.
void emit_rk_curve(const RunFile& lists, const Qrels& qrels, const std::vector<std::string>& query_ids,
                   std::size_t k_max, const std::filesystem::path& path, const std::string& manifest_hash = {});

/// Writes `text` to path with a leading `# manifest <hash>` line.
void write_csv_file(const std::filesystem::path& path, const std::string& text, const std::string& manifest_hash);

}  // namespace regir
