#include "regir/experiment.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "regir/dense.hpp"
#include "regir/fusion.hpp"
#include "regir/neural/embedding.hpp"
#include "regir/neural/trainer.hpp"
#include "regir/util.hpp"

namespace regir {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view version() { return REGIR_VERSION; }

Task parse_task(std::string_view s) {
  if (s == "EU2UK" || s == "eu2uk") return Task::EU2UK;
  if (s == "UK2EU" || s == "uk2eu") return Task::UK2EU;
  throw Error("unknown task '" + std::string(s) + "' (expected EU2UK or UK2EU)");
}

std::string_view to_string(Task task) { return task == Task::EU2UK ? "EU2UK" : "UK2EU"; }

std::pair<CollectionTag, CollectionTag> task_tags(Task task) {
  return task == Task::EU2UK ? std::pair{CollectionTag::EU, CollectionTag::UK} : std::pair{CollectionTag::UK, CollectionTag::EU};
}

PrefetchMode parse_prefetch_mode(std::string_view s) {
  if (s == "bm25") return PrefetchMode::Bm25;
  if (s == "w2v-cent") return PrefetchMode::W2vCentroid;
  if (s == "doc-vectors") return PrefetchMode::DocVectors;
  if (s == "ensemble") return PrefetchMode::Ensemble;
  throw Error("unknown prefetch mode '" + std::string(s) + "' (expected bm25, w2v-cent, doc-vectors or ensemble)");
}

std::string_view to_string(PrefetchMode mode) {
  switch (mode) {
    case PrefetchMode::Bm25: return "bm25";
    case PrefetchMode::W2vCentroid: return "w2v-cent";
    case PrefetchMode::DocVectors: return "doc-vectors";
    case PrefetchMode::Ensemble: return "ensemble";
  }
  return "?";
}

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : split(s, ',')) {
    auto t = trim(part);
    if (t.empty()) continue;
    out.push_back(std::stoi(std::string(t)));
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv, const fs::path& base_dir) {
  ExperimentConfig c;
  c.raw = kv;
  c.base_dir = base_dir;
  c.task = parse_task(kv.require("task"));
  c.queries = resolve(base_dir, kv.require("data.queries"));
  c.pool = resolve(base_dir, kv.require("data.pool"));
  c.qrels = resolve(base_dir, kv.require("data.qrels"));
  c.splits = resolve(base_dir, kv.require("data.splits"));

  c.stopwords = kv.get("text.stopwords", "english");
  if (c.stopwords != "english") c.stopwords = resolve(base_dir, c.stopwords).string();
  c.idf_filter = kv.get_bool("text.idf_filter", true);

  c.prefetch = parse_prefetch_mode(kv.get("prefetch.mode", "bm25"));
  const long k = kv.get_int("prefetch.k", 100);
  if (k < 1) throw Error("prefetch.k must be >= 1");
  c.k = static_cast<std::size_t>(k);

  c.bm25.k1 = kv.get_double("bm25.k1", c.bm25.k1);
  c.bm25.b = kv.get_double("bm25.b", c.bm25.b);
  c.bm25.validate();
  c.tune_bm25 = kv.get_bool("bm25.tune", false);
  c.k1_grid = kv.has("bm25.k1_grid") ? parse_range(kv.get("bm25.k1_grid", "")) : default_k1_grid();
  c.b_grid = kv.has("bm25.b_grid") ? parse_range(kv.get("bm25.b_grid", "")) : default_b_grid();

  c.word_vectors = resolve(base_dir, kv.get("dense.word_vectors", ""));
  c.query_vectors = resolve(base_dir, kv.get("dense.query_vectors", ""));
  c.pool_vectors = resolve(base_dir, kv.get("dense.pool_vectors", ""));

  c.fusion_component = kv.get("fusion.component", "auto");
  c.alpha = kv.get_double("fusion.alpha", 0.5);
  c.tune_alpha = kv.get_bool("fusion.tune", false);
  c.alpha_grid = parse_range(kv.get("fusion.grid", "0:1:0.05"));

  const auto model = kv.get("rerank.model", "none");
  if (model != "none") c.reranker = neural::parse_model_kind(model);
  if (kv.has("rerank.hyperparams")) c.hyperparams = neural::Hyperparams::load(resolve(base_dir, kv.get("rerank.hyperparams", "")));
  c.seeds = static_cast<int>(kv.get_int("rerank.seeds", 3));
  c.rerank_embeddings = kv.get("rerank.embeddings", "word");
  c.contextual_vectors = resolve(base_dir, kv.get("rerank.contextual_vectors", ""));

  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));

  const auto years = kv.get("filter.years", "none");
  if (years == "tune") c.tune_filter = true;
  else if (years == "unbounded") c.filter_years = kUnboundedWindow;
  else if (years != "none") c.filter_years = static_cast<int>(kv.get_int("filter.years", 0));
  if (kv.has("filter.grid")) c.filter_grid = parse_int_list(kv.get("filter.grid", ""));
  c.filter_mode = parse_filter_mode(kv.get("filter.mode", "post"));
  c.filter_depth = static_cast<std::size_t>(kv.get_int("filter.depth", 0));

  c.k_max = static_cast<std::size_t>(kv.get_int("eval.k_max", 0));
  c.output_dir = resolve(base_dir, kv.get("output.dir", "out"));
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_kv(KvConfig::load(path), fs::absolute(path).parent_path());
}

void ExperimentConfig::validate() const {
  auto need = [](const fs::path& p, const std::string& key) {
    if (p.empty()) throw Error("config: '" + key + "' is required for this experiment");
    if (!fs::exists(p)) throw Error("config: '" + key + "' points to a missing file: " + p.string());
  };
  need(queries, "data.queries");
  need(pool, "data.pool");
  need(qrels, "data.qrels");
  need(splits, "data.splits");
  if (stopwords != "english") need(stopwords, "text.stopwords");
  if (k < 1) throw Error("config: prefetch.k must be >= 1");
  const bool dense_docs = prefetch == PrefetchMode::DocVectors ||
                          (prefetch == PrefetchMode::Ensemble && fusion_component != "w2v-cent" &&
                           (fusion_component == "doc-vectors" || !query_vectors.empty()));
  const bool w2v = prefetch == PrefetchMode::W2vCentroid || (prefetch == PrefetchMode::Ensemble && !dense_docs);
  if (dense_docs) {
    need(query_vectors, "dense.query_vectors");
    need(pool_vectors, "dense.pool_vectors");
  }
  if (w2v) need(word_vectors, "dense.word_vectors");
  if (fusion_component != "auto" && fusion_component != "doc-vectors" && fusion_component != "w2v-cent")
    throw Error("config: fusion.component must be auto, doc-vectors or w2v-cent");
  if (reranker) {
    if (seeds < 1) throw Error("config: rerank.seeds must be >= 1 when a reranker is trained");
    if (rerank_embeddings == "word") need(word_vectors, "dense.word_vectors");
    else if (rerank_embeddings == "contextual") need(contextual_vectors, "rerank.contextual_vectors");
    else throw Error("config: rerank.embeddings must be word or contextual");
  }
  if (filter_years && *filter_years < 0) throw Error("config: filter.years must be >= 0");
  if (tune_filter && filter_grid.empty()) throw Error("config: filter.grid is empty");
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["hash"] = hash;
  j["config"] = config;
  j["resources"] = resources;
  j["outputs"] = outputs;
  j["timings"] = json::array();
  for (const auto& t : timings) j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}, {"cached", t.cached}});
  return j.dump(2) + "\n";
}

void RunManifest::save(const fs::path& path) const { write_file(path, to_json()); }

RunManifest RunManifest::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  RunManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    m.hash = j.at("hash").get<std::string>();
    m.config = j.at("config").get<std::string>();
    m.resources = j.at("resources").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    for (const auto& t : j.at("timings"))
      m.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>(), t.at("cached").get<bool>()});
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, std::string("invalid manifest: ") + e.what());
  }
  return m;
}

void write_csv_file(const fs::path& path, const std::string& text, const std::string& manifest_hash) {
  std::string out;
  if (!manifest_hash.empty()) out = "# manifest " + manifest_hash + "\n";
  write_file(path, out + text);
}

void emit_rk_curve(const RunFile& lists, const Qrels& qrels, const std::vector<std::string>& query_ids,
                   std::size_t k_max, const fs::path& path, const std::string& manifest_hash) {
  std::ostringstream out;
  write_recall_curve(recall_curve(lists, qrels, query_ids, k_max), out, manifest_hash);
  write_file(path, out.str());
}

namespace {

template <class F>
std::string csv_text(F&& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

class Runner {
 public:
  explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg), out_(cfg.output_dir) {}

  RunManifest run() {
    fs::create_directories(out_ / ".cache");
    stage("ingest", [&] { ingest(); });
    stage("index", [&] { index(); });
    stage("prefetch", [&] { prefetch(); });
    stage("evaluate-prefetch", [&] { evaluate_prefetch(); });
    stage("date-filter", [&] { date_filter(); });
    if (cfg_.reranker) stage("train-rerank", [&] { train_rerank(); });
    stage("report", [&] { report(); });
    collect_outputs();
    manifest_.save(out_ / "manifest.json");
    return manifest_;
  }

 private:
  template <class F>
  void stage(const std::string& name, F&& fn) {
    spdlog::info("stage {}", name);
    cached_ = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      manifest_.save(out_ / "manifest.partial.json");
      throw StageError(name, e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    manifest_.timings.push_back({name, dt.count(), cached_});
  }

  fs::path stamp_path(const std::string& stage) const { return out_ / ".cache" / (stage + ".stamp"); }

  bool cache_hit(const std::string& stage, const std::string& key, const std::vector<fs::path>& outputs) const {
    const auto stamp = stamp_path(stage);
    if (!fs::exists(stamp) || read_file(stamp) != key) return false;
    return std::all_of(outputs.begin(), outputs.end(), [](const fs::path& p) { return fs::exists(p); });
  }
  void write_stamp(const std::string& stage, const std::string& key) const { write_file(stamp_path(stage), key); }

  void hash_resource(const fs::path& p) {
    if (!p.empty()) manifest_.resources[fs::weakly_canonical(p).string()] = sha256_file(p);
  }
  std::string resource_hash(const fs::path& p) const {
    return p.empty() ? std::string() : manifest_.resources.at(fs::weakly_canonical(p).string());
  }

  std::string csv(const std::string& name) const { return (out_ / name).string(); }

  void ingest() {
    auto [qtag, ptag] = task_tags(cfg_.task);
    queries_ = ingest_collection(cfg_.queries, qtag);
    Collection pool = ingest_collection(cfg_.pool, ptag);
    splits_ = load_split_manifest(cfg_.splits);
    pool_ = splits_.pool.empty() ? std::move(pool) : pool.subset(splits_.pool);
    qrels_ = load_qrels(cfg_.qrels, &queries_, &pool_);
    for (const auto& w : validate_split(splits_, queries_, pool_, qrels_)) spdlog::warn("{}", w);
    if (pool_.degenerate_count()) spdlog::warn("{} pool document(s) have an empty body", pool_.degenerate_count());

    for (const auto& p : {cfg_.queries, cfg_.pool, cfg_.qrels, cfg_.splits, cfg_.word_vectors, cfg_.query_vectors,
                          cfg_.pool_vectors, cfg_.contextual_vectors})
      hash_resource(p);
    if (cfg_.stopwords != "english") hash_resource(cfg_.stopwords);
    if (cfg_.raw.has("rerank.hyperparams")) hash_resource(resolve(cfg_.base_dir, cfg_.raw.get("rerank.hyperparams", "")));
    manifest_.version = std::string(version());
    manifest_.config = cfg_.raw.dump();
    KvConfig hashed = cfg_.raw;
    hashed.set("output.dir", "");
    std::string material = manifest_.version + "\n" + hashed.dump();
    for (const auto& [p, h] : manifest_.resources) material += h + "\n";
    manifest_.hash = sha256_hex(material);

    json stats;
    stats["task"] = std::string(to_string(cfg_.task));
    stats["pool_size"] = pool_.size();
    stats["queries"] = {{"train", splits_.train.size()}, {"dev", splits_.dev.size()}, {"test", splits_.test.size()}};
    stats["mean_relevant"] = {{"train", qrels_.mean_relevant(splits_.train)},
                              {"dev", qrels_.mean_relevant(splits_.dev)},
                              {"test", qrels_.mean_relevant(splits_.test)}};
    stats["pool"] = json::parse(to_json(corpus_stats(pool_)));
    stats["query_collection"] = json::parse(to_json(corpus_stats(queries_)));
    write_file(out_ / "dataset_stats.json", stats.dump(2) + "\n");
  }

  void index() {
    index_key_ = sha256_hex(manifest_.version + resource_hash(cfg_.pool) + resource_hash(cfg_.splits) + cfg_.stopwords +
                            (cfg_.stopwords == "english" ? "" : resource_hash(cfg_.stopwords)) +
                            (cfg_.idf_filter ? "idf" : "noidf"));
    const auto path = out_ / "index.bin";
    if (cache_hit("index", index_key_, {path})) {
      index_ = PostingsIndex::load(path);
      cached_ = true;
    } else {
      auto sw = cfg_.stopwords == "english" ? StopwordList::english() : StopwordList::load(cfg_.stopwords);
      index_ = PostingsIndex::build(pool_, std::move(sw), cfg_.idf_filter);
      index_.save(path);
      write_stamp("index", index_key_);
    }
    for (const char* split : {"train", "dev", "test"})
      inputs_[split] = prepare_queries(queries_, splits_.split(split), index_.pipeline());
  }

  std::size_t depth() const {
    std::size_t d = std::max(cfg_.k, cfg_.k_max);
    if (cfg_.has_filter() && cfg_.filter_mode == FilterMode::Pre) d = std::max(d, cfg_.filter_depth ? cfg_.filter_depth : 2 * cfg_.k);
    return d;
  }

  bool uses_doc_vectors() const {
    if (cfg_.prefetch == PrefetchMode::DocVectors) return true;
    if (cfg_.prefetch != PrefetchMode::Ensemble) return false;
    if (cfg_.fusion_component == "auto") return !cfg_.query_vectors.empty();
    return cfg_.fusion_component == "doc-vectors";
  }

  RunFile bm25_run(const std::vector<QueryInput>& qs, const Bm25Params& p, std::size_t k) const {
    std::vector<RankedList> lists(qs.size());
    parallel_for(qs.size(), [&](std::size_t i) { lists[i] = index_.search(qs[i], p, k); });
    return to_run(std::move(lists));
  }

  RunFile dense_run(const std::vector<QueryInput>& qs, std::size_t k) {
    std::vector<RankedList> lists(qs.size());
    if (uses_doc_vectors()) {
      if (!doc_prefetcher_) {
        auto qv = DocVectorStore::load(cfg_.query_vectors);
        auto pv = DocVectorStore::load(cfg_.pool_vectors);
        pv.validate_against(pool_);
        doc_prefetcher_.emplace(std::move(qv), std::move(pv));
      }
      parallel_for(qs.size(), [&](std::size_t i) { lists[i] = doc_prefetcher_->search(qs[i].id, k); });
    } else {
      if (!centroid_) {
        word_vectors_ = WordVectors::load(cfg_.word_vectors);
        std::vector<TokenList> docs(pool_.size());
        std::vector<std::string> ids(pool_.size());
        parallel_for(pool_.size(), [&](std::size_t i) {
          ids[i] = pool_.documents()[i].doc_id;
          docs[i] = index_.pipeline().process(pool_.documents()[i].full_text());
        });
        centroid_.emplace(word_vectors_, index_.idf());
        centroid_->index(ids, docs);
      }
      parallel_for(qs.size(), [&](std::size_t i) {
        try {
          lists[i] = centroid_->search(qs[i].id, qs[i].tokens, k);
        } catch (const EmptyCentroidError&) {
          lists[i] = RankedList{qs[i].id, {}};
        }
      });
    }
    return to_run(std::move(lists));
  }

  void prefetch() {
    const auto d = depth();
    std::ostringstream key;
    key << index_key_ << '|' << to_string(cfg_.prefetch) << '|' << d << '|' << cfg_.k << '|' << format_double(cfg_.bm25.k1)
        << '|' << format_double(cfg_.bm25.b) << '|' << cfg_.tune_bm25 << '|' << cfg_.raw.get("bm25.k1_grid", "")
        << '|' << cfg_.raw.get("bm25.b_grid", "") << '|' << resource_hash(cfg_.word_vectors) << '|'
        << resource_hash(cfg_.query_vectors) << '|' << resource_hash(cfg_.pool_vectors) << '|' << cfg_.fusion_component
        << '|' << format_double(cfg_.alpha) << '|' << cfg_.tune_alpha << '|' << cfg_.raw.get("fusion.grid", "");
    prefetch_key_ = sha256_hex(key.str());

    std::vector<fs::path> outputs{out_ / "prefetch_params.txt"};
    for (const char* s : {"train", "dev", "test"}) outputs.push_back(out_ / ("prefetch_" + std::string(s) + ".run"));
    if (cache_hit("prefetch", prefetch_key_, outputs)) {
      auto params = KvConfig::load(out_ / "prefetch_params.txt");
      bm25_ = {params.get_double("k1", cfg_.bm25.k1), params.get_double("b", cfg_.bm25.b)};
      alpha_ = params.get_double("alpha", cfg_.alpha);
      for (const char* s : {"train", "dev", "test"}) runs_[s] = read_run(out_ / ("prefetch_" + std::string(s) + ".run"));
      cached_ = true;
      return;
    }

    bm25_ = cfg_.bm25;
    alpha_ = cfg_.alpha;
    const bool lexical = cfg_.prefetch == PrefetchMode::Bm25 || cfg_.prefetch == PrefetchMode::Ensemble;
    if (lexical && cfg_.tune_bm25) {
      auto tuned = tune_bm25(index_, inputs_["dev"], qrels_, cfg_.k1_grid, cfg_.b_grid, cfg_.k);
      bm25_ = tuned.best;
      write_file(out_ / "bm25_grid.csv", csv_text([&](std::ostream& o) { tuned.grid.write_csv(o, manifest_.hash); }));
      spdlog::info("bm25 tuned: k1={} b={} dev R@{}={:.4f}", bm25_.k1, bm25_.b, cfg_.k, tuned.best_recall);
    }

    if (cfg_.prefetch == PrefetchMode::Ensemble) {
      const auto component_depth = 2 * d;
      std::map<std::string, std::pair<RunFile, RunFile>> components;
      for (const char* s : {"train", "dev", "test"})
        components[s] = {dense_run(inputs_[s], component_depth), bm25_run(inputs_[s], bm25_, component_depth)};
      if (cfg_.tune_alpha) {
        auto tuned = tune_alpha(splits_.dev, qrels_, components["dev"].first, components["dev"].second, cfg_.alpha_grid, cfg_.k);
        alpha_ = tuned.alpha;
        write_file(out_ / "alpha_grid.csv", csv_text([&](std::ostream& o) { tuned.write_csv(o, manifest_.hash); }));
        spdlog::info("alpha tuned: {} dev R@{}={:.4f}", alpha_, cfg_.k, tuned.best_recall);
      }
      for (const char* s : {"train", "dev", "test"})
        runs_[s] = fuse_runs(components[s].first, components[s].second, alpha_, d);
    } else {
      for (const char* s : {"train", "dev", "test"})
        runs_[s] = cfg_.prefetch == PrefetchMode::Bm25 ? bm25_run(inputs_[s], bm25_, d) : dense_run(inputs_[s], d);
    }

    for (const char* s : {"train", "dev", "test"})
      write_run(runs_[s], out_ / ("prefetch_" + std::string(s) + ".run"), "manifest " + manifest_.hash);
    write_file(out_ / "prefetch_params.txt", "k1=" + format_double(bm25_.k1) + "\nb=" + format_double(bm25_.b) +
                                                 "\nalpha=" + format_double(alpha_) + "\n");
    write_stamp("prefetch", prefetch_key_);
  }

  static RunFile truncate(const RunFile& run, std::size_t k) {
    RunFile out;
    for (const auto& [q, l] : run) out.emplace(q, l.truncated(k));
    return out;
  }

  void evaluate_prefetch() {
    const auto k_max = cfg_.k_max ? cfg_.k_max : cfg_.k;
    emit_rk_curve(runs_["test"], qrels_, splits_.test, k_max, out_ / "rk_curve.csv", manifest_.hash);
    for (const char* s : {"dev", "test"}) {
      auto report = evaluate(truncate(runs_[s], cfg_.k), qrels_, splits_.split(s));
      report.save(out_ / ("eval_prefetch_" + std::string(s) + ".csv"), manifest_.hash);
    }
    std::set<std::size_t> ks{20, 100, cfg_.k};
    std::ostringstream o;
    o << "split,k,recall\n";
    for (const char* s : {"dev", "test"})
      for (auto k : ks)
        if (k <= depth()) o << s << ',' << k << ',' << format_double(mean_recall_at_k(runs_[s], qrels_, splits_.split(s), k)) << '\n';
    write_csv_file(out_ / "prefetch_recall.csv", o.str(), manifest_.hash);
  }

  /// Lists handed to the re-ranker (or evaluated directly) for a split.
  RunFile stage_input(const std::string& split) const {
    RunFile out;
    for (const auto& [q, list] : runs_.at(split)) {
      if (window_ && cfg_.filter_mode == FilterMode::Pre) out.emplace(q, prefilter(queries_.year_of(q), list, *window_, cfg_.k, pool_));
      else out.emplace(q, list.truncated(cfg_.k));
    }
    return out;
  }

  RunFile post_filter(RunFile run) const {
    if (!window_ || cfg_.filter_mode != FilterMode::Post) return run;
    for (auto& [q, list] : run) list = apply_filter(queries_.year_of(q), list, *window_, pool_);
    return run;
  }

  void date_filter() {
    std::vector<std::string> all;
    for (const char* s : {"train", "dev", "test"}) all.insert(all.end(), splits_.split(s).begin(), splits_.split(s).end());
    std::ostringstream o;
    write_year_histogram(year_difference_histogram(all, qrels_, queries_, pool_), o, manifest_.hash);
    write_file(out_ / "year_diff_hist.csv", o.str());
    if (!cfg_.has_filter()) return;
    if (cfg_.filter_years) {
      window_ = *cfg_.filter_years;
    } else {
      auto grid = cfg_.filter_grid;
      grid.push_back(kUnboundedWindow);
      window_ = choose_window(runs_["dev"], queries_, pool_, qrels_, grid, cfg_.filter_mode, cfg_.k);
    }
    spdlog::info("date window: {}", *window_ == kUnboundedWindow ? std::string("unbounded") : std::to_string(*window_));
    auto filtered = post_filter(stage_input("test"));
    evaluate(filtered, qrels_, splits_.test).save(out_ / "eval_filtered_test.csv", manifest_.hash);
  }

  void train_rerank() {
    const auto kind = *cfg_.reranker;
    const std::string name(neural::to_string(kind));
    std::unique_ptr<neural::TokenEmbedder> embedder;
    std::optional<neural::ContextualVectorStore> contextual;
    if (cfg_.rerank_embeddings == "contextual") {
      contextual = neural::ContextualVectorStore::load(cfg_.contextual_vectors);
      embedder = std::make_unique<neural::ContextualEmbedder>(*contextual);
    } else {
      if (word_vectors_.size() == 0) word_vectors_ = WordVectors::load(cfg_.word_vectors);
      embedder = std::make_unique<neural::WordVectorEmbedder>(word_vectors_);
    }

    neural::NeuralReranker prototype(kind, cfg_.hyperparams);
    neural::PairFeaturizer featurizer({&queries_, &pool_, &index_.pipeline(), embedder.get(), embedder.get()}, prototype);

    const auto train_lists = truncate(runs_["train"], cfg_.k);
    auto sample = neural::sample_triples(splits_.train, qrels_, train_lists, cfg_.hyperparams.negatives,
                                         derive_seed(cfg_.seed, "triples"));
    write_file(out_ / "triples_summary.txt", "triples=" + std::to_string(sample.triples.size()) +
                                                 "\nskipped_positives=" + std::to_string(sample.skipped_positives) +
                                                 "\nskipped_queries=" + std::to_string(sample.skipped_queries.size()) + "\n");
    const auto dev_lists = stage_input("dev");
    const auto test_lists = stage_input("test");

    const std::string key = sha256_hex(prefetch_key_ + '|' + name + '|' + cfg_.hyperparams.to_kv().dump() + '|' +
                                       std::to_string(cfg_.seeds) + '|' + std::to_string(cfg_.seed) + '|' +
                                       cfg_.rerank_embeddings + resource_hash(cfg_.contextual_vectors) + '|' +
                                       (window_ ? std::to_string(*window_) : "none") + cfg_.raw.get("filter.mode", ""));
    std::vector<fs::path> checkpoints;
    for (int s = 0; s < cfg_.seeds; ++s) checkpoints.push_back(out_ / (name + "_seed" + std::to_string(s) + ".ckpt"));
    const bool hit = cache_hit("train", key, checkpoints);
    cached_ = hit;

    std::vector<EvalReport> reports;
    std::ostringstream weights;
    weights << "seed,w_r,w_p,best_epoch\n";
    for (int s = 0; s < cfg_.seeds; ++s) {
      auto hp = cfg_.hyperparams;
      hp.seed = derive_seed(cfg_.seed, "rerank/" + std::to_string(s));
      neural::NeuralReranker model(kind, hp);
      int best_epoch = 0;
      if (hit) {
        model = neural::NeuralReranker::load(checkpoints[s]);
        best_epoch = static_cast<int>(KvConfig::load(out_ / (name + "_seed" + std::to_string(s) + ".best")).get_int("epoch", 0));
      } else {
        model.initialize(hp.seed);
        neural::TrainData data{&sample.triples, &train_lists, &dev_lists, &splits_.dev, &qrels_};
        auto result = neural::train(model, featurizer, data, hp);
        model = std::move(result.model);
        best_epoch = result.best_epoch;
        model.save(checkpoints[s]);
        write_file(out_ / (name + "_seed" + std::to_string(s) + ".best"), "epoch=" + std::to_string(best_epoch) + "\n");
        write_file(out_ / ("train_log_" + name + "_seed" + std::to_string(s) + ".csv"),
                   csv_text([&](std::ostream& o) { neural::write_training_log(result.log, o, manifest_.hash); }));
      }
      weights << s << ',' << format_double(model.w_r()) << ',' << format_double(model.w_p()) << ',' << best_epoch << '\n';
      auto reranked = post_filter(neural::rerank_run(model, featurizer, test_lists));
      write_run(reranked, out_ / ("rerank_" + name + "_seed" + std::to_string(s) + "_test.run"), "manifest " + manifest_.hash);
      reports.push_back(evaluate(reranked, qrels_, splits_.test));
      reports.back().save(out_ / ("eval_" + name + "_seed" + std::to_string(s) + "_test.csv"), manifest_.hash);
    }
    if (!hit) write_stamp("train", key);
    write_csv_file(out_ / "fusion_weights.csv", weights.str(), manifest_.hash);
    auto agg = aggregate_runs(reports);
    write_file(out_ / "rerank_summary.csv", csv_text([&](std::ostream& o) { agg.write_csv(o, manifest_.hash); }));
    rerank_summary_ = agg;
  }

  void report() {
    std::ostringstream o;
    o << "task " << to_string(cfg_.task) << ", pre-fetcher " << to_string(cfg_.prefetch) << ", k=" << cfg_.k << '\n';
    if (cfg_.prefetch == PrefetchMode::Bm25 || cfg_.prefetch == PrefetchMode::Ensemble)
      o << "bm25 k1=" << format_double(bm25_.k1) << " b=" << format_double(bm25_.b) << '\n';
    if (cfg_.prefetch == PrefetchMode::Ensemble) o << "alpha=" << format_double(alpha_) << '\n';
    o << "test R@" << cfg_.k << " " << format_mean_sd(mean_recall_at_k(runs_["test"], qrels_, splits_.test, cfg_.k), 0.0) << '\n';
    if (window_) o << "date window " << (*window_ == kUnboundedWindow ? std::string("unbounded") : std::to_string(*window_)) << '\n';
    if (rerank_summary_) {
      for (const auto& m : rerank_summary_->metrics) o << m.metric << ' ' << format_mean_sd(m.mean, m.sd) << '\n';
    }
    write_file(out_ / "summary.txt", o.str());
  }

  void collect_outputs() {
    manifest_.outputs.clear();
    for (const auto& entry : fs::directory_iterator(out_)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (name == "manifest.json" || name == "manifest.partial.json") continue;
      manifest_.outputs[name] = sha256_file(entry.path());
    }
    fs::remove(out_ / "manifest.partial.json");
  }

  const ExperimentConfig& cfg_;
  fs::path out_;
  RunManifest manifest_;
  bool cached_ = false;

  Collection queries_, pool_;
  Qrels qrels_;
  SplitManifest splits_;
  PostingsIndex index_;
  std::string index_key_, prefetch_key_;
  std::map<std::string, std::vector<QueryInput>> inputs_;
  std::map<std::string, RunFile> runs_;
  Bm25Params bm25_;
  double alpha_ = 0.5;
  WordVectors word_vectors_;
  std::optional<CentroidPrefetcher> centroid_;
  std::optional<DocVectorPrefetcher> doc_prefetcher_;
  std::optional<int> window_;
  std::optional<AggregateReport> rerank_summary_;
};

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  return Runner(config).run();
}

}  // namespace regir
