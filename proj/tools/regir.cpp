#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "regir/corpus.hpp"
#include "regir/dense.hpp"
#include "regir/eval.hpp"
#include "regir/experiment.hpp"
#include "regir/fusion.hpp"
#include "regir/lexical.hpp"
#include "regir/neural/embedding.hpp"
#include "regir/neural/reranker.hpp"
#include "regir/neural/trainer.hpp"
#include "regir/synthetic.hpp"
#include "regir/temporal.hpp"
#include "regir/util.hpp"

namespace fs = std::filesystem;
using namespace regir;

namespace {

struct Sides {
  std::string task = "EU2UK";
  CollectionTag query_tag() const { return task_tags(parse_task(task)).first; }
  CollectionTag pool_tag() const { return task_tags(parse_task(task)).second; }
};

std::vector<std::string> split_ids(const std::string& splits, const std::string& split, const RunFile* run) {
  if (!splits.empty()) return load_split_manifest(splits).split(split);
  std::vector<std::string> ids;
  if (run)
    for (const auto& [q, _] : *run) ids.push_back(q);
  return ids;
}

template <class F>
void write_text(const std::string& path, F&& fn) {
  std::ostringstream o;
  fn(o);
  if (path.empty() || path == "-") std::cout << o.str();
  else write_file(path, o.str());
}

std::unique_ptr<neural::TokenEmbedder> make_embedder(const std::string& word_vectors, const std::string& contextual,
                                                     std::optional<WordVectors>& wv,
                                                     std::optional<neural::ContextualVectorStore>& cv) {
  if (!contextual.empty()) {
    cv = neural::ContextualVectorStore::load(contextual);
    return std::make_unique<neural::ContextualEmbedder>(*cv);
  }
  if (word_vectors.empty()) throw Error("either --word-vectors or --contextual is required");
  wv = WordVectors::load(word_vectors);
  return std::make_unique<neural::WordVectorEmbedder>(*wv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regir: two-stage legal document-to-document retrieval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate or convert a collection into canonical JSON-lines");
  std::string in_path, in_tag = "EU", in_out, in_stats, in_qrels_out;
  bool in_convert = false;
  ingest->add_option("input", in_path, "JSON-lines file (or, with --convert, JSON array / JSONL / directory)")->required();
  ingest->add_option("--tag", in_tag, "Collection tag (EU or UK)");
  ingest->add_option("-o,--out", in_out, "Canonical JSON-lines output");
  ingest->add_option("--stats", in_stats, "Corpus statistics JSON output");
  ingest->add_flag("--convert", in_convert, "Map released-archive keys onto the canonical schema");
  ingest->add_option("--qrels-out", in_qrels_out, "With --convert: relevance links found in the records");

  // index
  auto* index = app.add_subcommand("index", "Build the BM25 inverted index of a pool");
  std::string ix_pool, ix_out, ix_stopwords;
  Sides ix_sides;
  bool ix_no_idf = false;
  index->add_option("--pool", ix_pool, "Pool collection (JSONL)")->required();
  index->add_option("-o,--out", ix_out, "Index file")->required();
  index->add_option("--stopwords", ix_stopwords, "Stop-word list (one per line); built-in English list by default");
  index->add_flag("--no-idf-filter", ix_no_idf, "Keep low-idf terms (stop-words are still removed)");
  index->add_option("--task", ix_sides.task, "EU2UK or UK2EU");

  // tune-bm25
  auto* tune = app.add_subcommand("tune-bm25", "Grid-search k1 and b by mean R@k");
  std::string tb_index, tb_queries, tb_qrels, tb_splits, tb_split = "dev", tb_out, tb_k1 = "0.5:8:0.5", tb_b = "0:1:0.1";
  std::size_t tb_k = 100;
  Sides tb_sides;
  tune->add_option("--index", tb_index)->required();
  tune->add_option("--queries", tb_queries)->required();
  tune->add_option("--qrels", tb_qrels)->required();
  tune->add_option("--splits", tb_splits)->required();
  tune->add_option("--split", tb_split, "Split used for tuning");
  tune->add_option("-k", tb_k, "Recall depth");
  tune->add_option("--k1-grid", tb_k1, "lo:hi:step");
  tune->add_option("--b-grid", tb_b, "lo:hi:step");
  tune->add_option("-o,--out", tb_out, "Grid CSV (stdout if omitted)");
  tune->add_option("--task", tb_sides.task);

  // vectors
  auto* vectors = app.add_subcommand("vectors", "Compute tf-idf centroids or validate a document-vector file");
  std::string vc_index, vc_collection, vc_word_vectors, vc_out, vc_check, vc_tag = "UK";
  vectors->add_option("--index", vc_index, "Index (supplies the text pipeline and idf)");
  vectors->add_option("--collection", vc_collection, "Documents to embed, or the collection to validate against");
  vectors->add_option("--tag", vc_tag, "Collection tag");
  vectors->add_option("--word-vectors", vc_word_vectors);
  vectors->add_option("-o,--out", vc_out, "Output vector file");
  vectors->add_option("--check", vc_check, "Document-vector file to validate");

  // prefetch
  auto* prefetch = app.add_subcommand("prefetch", "First-stage retrieval");
  std::string pf_mode = "bm25", pf_index, pf_queries, pf_splits, pf_split = "test", pf_out, pf_wv, pf_qv, pf_pv, pf_pool;
  std::size_t pf_k = 100;
  double pf_k1 = 1.2, pf_b = 0.75;
  Sides pf_sides;
  prefetch->add_option("--mode", pf_mode, "bm25, w2v-cent or doc-vectors");
  prefetch->add_option("--index", pf_index)->required();
  prefetch->add_option("--queries", pf_queries)->required();
  prefetch->add_option("--pool", pf_pool, "Pool collection (w2v-cent)");
  prefetch->add_option("--splits", pf_splits)->required();
  prefetch->add_option("--split", pf_split);
  prefetch->add_option("-k", pf_k);
  prefetch->add_option("--k1", pf_k1);
  prefetch->add_option("--b", pf_b);
  prefetch->add_option("--word-vectors", pf_wv);
  prefetch->add_option("--query-vectors", pf_qv);
  prefetch->add_option("--pool-vectors", pf_pv);
  prefetch->add_option("-o,--out", pf_out)->required();
  prefetch->add_option("--task", pf_sides.task);

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "Ensemble two runs by weighted min-max-normalized scores");
  std::string fu_a, fu_b, fu_out, fu_qrels, fu_splits, fu_split = "dev", fu_grid = "0:1:0.05", fu_grid_out;
  double fu_alpha = 0.5;
  bool fu_tune = false;
  std::size_t fu_k = 100;
  fuse_cmd->add_option("--a", fu_a, "Run weighted by alpha (dense)")->required();
  fuse_cmd->add_option("--b", fu_b, "Run weighted by 1 - alpha (bm25)")->required();
  fuse_cmd->add_option("--alpha", fu_alpha);
  fuse_cmd->add_flag("--tune-alpha", fu_tune, "Pick alpha on --split by mean R@k");
  fuse_cmd->add_option("--grid", fu_grid, "lo:hi:step");
  fuse_cmd->add_option("--grid-out", fu_grid_out, "Alpha grid CSV");
  fuse_cmd->add_option("--qrels", fu_qrels);
  fuse_cmd->add_option("--splits", fu_splits);
  fuse_cmd->add_option("--split", fu_split);
  fuse_cmd->add_option("-k", fu_k);
  fuse_cmd->add_option("-o,--out", fu_out)->required();

  // train
  auto* train = app.add_subcommand("train", "Train a DRMM or PACRR re-ranker with pairwise hinge loss");
  std::string tr_model = "drmm", tr_hp, tr_train_run, tr_dev_run, tr_queries, tr_pool, tr_qrels, tr_splits, tr_index,
              tr_wv, tr_ctx, tr_out, tr_log;
  std::uint64_t tr_seed = 0;
  std::size_t tr_k = 100;
  Sides tr_sides;
  train->add_option("--model", tr_model, "drmm or pacrr");
  train->add_option("--hyperparams", tr_hp, "key=value hyperparameter file");
  train->add_option("--train-run", tr_train_run)->required();
  train->add_option("--dev-run", tr_dev_run)->required();
  train->add_option("--queries", tr_queries)->required();
  train->add_option("--pool", tr_pool)->required();
  train->add_option("--qrels", tr_qrels)->required();
  train->add_option("--splits", tr_splits)->required();
  train->add_option("--index", tr_index, "Index supplying the text pipeline")->required();
  train->add_option("--word-vectors", tr_wv);
  train->add_option("--contextual", tr_ctx, "Frozen contextual token vectors");
  train->add_option("--seed", tr_seed);
  train->add_option("-k", tr_k, "Re-rank depth");
  train->add_option("-o,--out", tr_out, "Checkpoint")->required();
  train->add_option("--log", tr_log, "Training log CSV");
  train->add_option("--task", tr_sides.task);

  // rerank
  auto* rr = app.add_subcommand("rerank", "Re-rank a run with a trained checkpoint");
  std::string rr_ckpt, rr_run, rr_queries, rr_pool, rr_index, rr_wv, rr_ctx, rr_out;
  std::size_t rr_k = 100;
  Sides rr_sides;
  rr->add_option("--checkpoint", rr_ckpt)->required();
  rr->add_option("--run", rr_run)->required();
  rr->add_option("--queries", rr_queries)->required();
  rr->add_option("--pool", rr_pool)->required();
  rr->add_option("--index", rr_index)->required();
  rr->add_option("--word-vectors", rr_wv);
  rr->add_option("--contextual", rr_ctx);
  rr->add_option("-k", rr_k, "Re-rank depth");
  rr->add_option("-o,--out", rr_out)->required();
  rr->add_option("--task", rr_sides.task);

  // date-filter
  auto* df = app.add_subcommand("date-filter", "Drop documents too far in time from the query");
  std::string df_run, df_queries, df_pool, df_out, df_mode = "post";
  int df_years = kUnboundedWindow;
  std::size_t df_k = 100;
  Sides df_sides;
  df->add_option("--run", df_run)->required();
  df->add_option("--queries", df_queries)->required();
  df->add_option("--pool", df_pool)->required();
  df->add_option("--years,--date-filter", df_years, "Maximum |year difference|")->required();
  df->add_option("--mode,--filter-mode", df_mode, "pre (filter then keep k, refilling from deeper ranks) or post");
  df->add_option("-k", df_k, "List length kept in pre mode");
  df->add_option("-o,--out", df_out)->required();
  df->add_option("--task", df_sides.task);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "R@20, nDCG@20 and R-Precision per query and on average");
  std::string ev_run, ev_qrels, ev_splits, ev_split = "test", ev_out, ev_curve;
  std::size_t ev_kmax = 0, ev_k = 0;
  ev->add_option("--run", ev_run)->required();
  ev->add_option("--qrels", ev_qrels)->required();
  ev->add_option("--splits", ev_splits);
  ev->add_option("--split", ev_split);
  ev->add_option("-k", ev_k, "Truncate lists to k first");
  ev->add_option("-o,--out", ev_out, "Per-query CSV (stdout if omitted)");
  ev->add_option("--curve", ev_curve, "R@k curve CSV");
  ev->add_option("--k-max", ev_kmax, "Curve depth");

  // report
  auto* rep = app.add_subcommand("report", "Mean (± sd) over per-seed evaluation CSVs");
  std::vector<std::string> rep_files;
  std::string rep_out;
  rep->add_option("evals", rep_files, "Evaluation CSVs, one per seed")->required();
  rep->add_option("-o,--out", rep_out, "metric,mean,sd CSV");

  // run
  auto* run = app.add_subcommand("run", "Full pipeline from an experiment config");
  std::string run_config;
  run->add_option("config", run_config)->required();

  // make-toy
  auto* toy = app.add_subcommand("make-toy", "Write a small synthetic dataset and experiment config");
  std::string toy_out;
  std::uint64_t toy_seed = 7;
  toy->add_option("dir", toy_out)->required();
  toy->add_option("--seed", toy_seed);

  CLI11_PARSE(app, argc, argv);
  auto logger = spdlog::stderr_color_mt("regir");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*ingest) {
      const auto tag = parse_collection_tag(in_tag);
      Collection c = in_convert ? Collection(tag, convert_records(in_path, tag)) : ingest_collection(in_path, tag);
      if (in_convert && !in_qrels_out.empty()) convert_relevance(in_path).save(in_qrels_out);
      if (!in_out.empty()) write_collection(c, in_out);
      const auto stats = to_json(corpus_stats(c));
      if (!in_stats.empty()) write_file(in_stats, stats);
      else std::cout << stats;
      if (c.degenerate_count()) spdlog::warn("{} document(s) have an empty body", c.degenerate_count());
    } else if (*index) {
      auto pool = ingest_collection(ix_pool, ix_sides.pool_tag());
      auto sw = ix_stopwords.empty() ? StopwordList::english() : StopwordList::load(ix_stopwords);
      auto idx = PostingsIndex::build(pool, std::move(sw), !ix_no_idf);
      idx.save(ix_out);
      spdlog::info("indexed {} documents, {} terms, avg length {:.1f}", idx.doc_count(), idx.vocabulary_size(), idx.avg_len());
    } else if (*tune) {
      auto idx = PostingsIndex::load(tb_index);
      auto queries = ingest_collection(tb_queries, tb_sides.query_tag());
      auto qrels = load_qrels(tb_qrels, &queries, nullptr);
      auto ids = load_split_manifest(tb_splits).split(tb_split);
      auto inputs = prepare_queries(queries, ids, idx.pipeline());
      auto result = tune_bm25(idx, inputs, qrels, parse_range(tb_k1), parse_range(tb_b), tb_k);
      write_text(tb_out, [&](std::ostream& o) { result.grid.write_csv(o); });
      spdlog::info("best k1={} b={} R@{}={:.4f}{}", result.best.k1, result.best.b, tb_k, result.best_recall,
                   in_textbook_range(result.best) ? "" : " (outside the textbook range)");
    } else if (*vectors) {
      if (!vc_check.empty()) {
        auto store = DocVectorStore::load(vc_check);
        if (!vc_collection.empty()) store.validate_against(ingest_collection(vc_collection, parse_collection_tag(vc_tag)));
        std::cout << store.size() << " vectors, dim " << store.dim() << ", provenance '" << store.provenance() << "'\n";
      } else {
        if (vc_index.empty() || vc_collection.empty() || vc_word_vectors.empty() || vc_out.empty())
          throw Error("vectors: --index, --collection, --word-vectors and --out are required (or use --check)");
        auto idx = PostingsIndex::load(vc_index);
        auto docs = ingest_collection(vc_collection, parse_collection_tag(vc_tag));
        auto wv = WordVectors::load(vc_word_vectors);
        std::vector<std::string> ids;
        std::vector<TokenList> toks;
        for (const auto& d : docs) {
          ids.push_back(d.doc_id);
          toks.push_back(idx.pipeline().process(d.full_text()));
        }
        CentroidPrefetcher cp(wv, idx.idf());
        cp.index(ids, toks);
        cp.store().save(vc_out);
      }
    } else if (*prefetch) {
      auto idx = PostingsIndex::load(pf_index);
      auto queries = ingest_collection(pf_queries, pf_sides.query_tag());
      auto ids = load_split_manifest(pf_splits).split(pf_split);
      auto inputs = prepare_queries(queries, ids, idx.pipeline());
      std::vector<RankedList> lists(inputs.size());
      const auto mode = parse_prefetch_mode(pf_mode);
      if (mode == PrefetchMode::Bm25) {
        Bm25Params p{pf_k1, pf_b};
        p.validate();
        parallel_for(inputs.size(), [&](std::size_t i) { lists[i] = idx.search(inputs[i], p, pf_k); });
      } else if (mode == PrefetchMode::DocVectors) {
        DocVectorPrefetcher dp(DocVectorStore::load(pf_qv), DocVectorStore::load(pf_pv));
        parallel_for(inputs.size(), [&](std::size_t i) { lists[i] = dp.search(inputs[i].id, pf_k); });
      } else if (mode == PrefetchMode::W2vCentroid) {
        if (pf_pool.empty() || pf_wv.empty()) throw Error("w2v-cent needs --pool and --word-vectors");
        auto pool = ingest_collection(pf_pool, pf_sides.pool_tag());
        auto wv = WordVectors::load(pf_wv);
        std::vector<std::string> pids;
        std::vector<TokenList> toks;
        for (const auto& d : pool) {
          pids.push_back(d.doc_id);
          toks.push_back(idx.pipeline().process(d.full_text()));
        }
        CentroidPrefetcher cp(wv, idx.idf());
        cp.index(pids, toks);
        parallel_for(inputs.size(), [&](std::size_t i) { lists[i] = cp.search(inputs[i].id, inputs[i].tokens, pf_k); });
      } else {
        throw Error("prefetch: use 'fuse' to build the ensemble from two runs");
      }
      write_run(to_run(std::move(lists)), pf_out);
    } else if (*fuse_cmd) {
      auto a = read_run(fu_a), b = read_run(fu_b);
      double alpha = fu_alpha;
      if (fu_tune) {
        if (fu_qrels.empty() || fu_splits.empty()) throw Error("--tune-alpha needs --qrels and --splits");
        auto qrels = load_qrels(fu_qrels, nullptr, nullptr);
        auto ids = load_split_manifest(fu_splits).split(fu_split);
        auto tuned = tune_alpha(ids, qrels, a, b, parse_range(fu_grid), fu_k);
        alpha = tuned.alpha;
        if (!fu_grid_out.empty()) write_text(fu_grid_out, [&](std::ostream& o) { tuned.write_csv(o); });
        spdlog::info("alpha={} R@{}={:.4f}", alpha, fu_k, tuned.best_recall);
      }
      write_run(fuse_runs(a, b, alpha, fu_k), fu_out);
    } else if (*train) {
      auto hp = tr_hp.empty() ? neural::Hyperparams{} : neural::Hyperparams::load(tr_hp);
      hp.seed = tr_seed;
      auto queries = ingest_collection(tr_queries, tr_sides.query_tag());
      auto pool = ingest_collection(tr_pool, tr_sides.pool_tag());
      auto qrels = load_qrels(tr_qrels, &queries, &pool);
      auto splits = load_split_manifest(tr_splits);
      auto idx = PostingsIndex::load(tr_index);
      RunFile train_run, dev_run;
      for (auto& [q, l] : read_run(tr_train_run)) train_run.emplace(q, l.truncated(tr_k));
      for (auto& [q, l] : read_run(tr_dev_run)) dev_run.emplace(q, l.truncated(tr_k));
      std::optional<WordVectors> wv;
      std::optional<neural::ContextualVectorStore> cv;
      auto embedder = make_embedder(tr_wv, tr_ctx, wv, cv);
      neural::NeuralReranker model(neural::parse_model_kind(tr_model), hp);
      model.initialize(hp.seed);
      neural::PairFeaturizer feat({&queries, &pool, &idx.pipeline(), embedder.get(), embedder.get()}, model);
      auto sample = neural::sample_triples(splits.train, qrels, train_run, hp.negatives, derive_seed(hp.seed, "triples"));
      spdlog::info("{} triples, {} relevant documents outside the pre-fetched lists", sample.triples.size(),
                   sample.skipped_positives);
      neural::TrainData data{&sample.triples, &train_run, &dev_run, &splits.dev, &qrels};
      auto result = neural::train(model, feat, data, hp);
      result.model.save(tr_out);
      if (!tr_log.empty()) write_text(tr_log, [&](std::ostream& o) { neural::write_training_log(result.log, o); });
      spdlog::info("best epoch {} dev R@20 {:.4f} w_r {:.4f} w_p {:.4f}", result.best_epoch, result.best_dev_r20,
                   result.model.w_r(), result.model.w_p());
    } else if (*rr) {
      auto model = neural::NeuralReranker::load(rr_ckpt);
      auto queries = ingest_collection(rr_queries, rr_sides.query_tag());
      auto pool = ingest_collection(rr_pool, rr_sides.pool_tag());
      auto idx = PostingsIndex::load(rr_index);
      std::optional<WordVectors> wv;
      std::optional<neural::ContextualVectorStore> cv;
      auto embedder = make_embedder(rr_wv, rr_ctx, wv, cv);
      neural::PairFeaturizer feat({&queries, &pool, &idx.pipeline(), embedder.get(), embedder.get()}, model);
      RunFile input;
      for (auto& [q, l] : read_run(rr_run)) input.emplace(q, l.truncated(rr_k));
      write_run(neural::rerank_run(model, feat, input), rr_out);
    } else if (*df) {
      auto queries = ingest_collection(df_queries, df_sides.query_tag());
      auto pool = ingest_collection(df_pool, df_sides.pool_tag());
      const auto mode = parse_filter_mode(df_mode);
      RunFile out;
      for (const auto& [q, l] : read_run(df_run)) {
        const int y = queries.year_of(q);
        out.emplace(q, mode == FilterMode::Pre ? prefilter(y, l, df_years, df_k, pool) : apply_filter(y, l, df_years, pool));
      }
      write_run(out, df_out);
    } else if (*ev) {
      auto run_file = read_run(ev_run);
      if (ev_k)
        for (auto& [q, l] : run_file) l = l.truncated(ev_k);
      auto qrels = load_qrels(ev_qrels, nullptr, nullptr);
      auto ids = split_ids(ev_splits, ev_split, &run_file);
      auto report = evaluate(run_file, qrels, ids);
      write_text(ev_out, [&](std::ostream& o) { report.write_csv(o); });
      if (!ev_curve.empty()) {
        std::size_t depth = ev_kmax;
        if (!depth)
          for (const auto& [q, l] : run_file) depth = std::max(depth, l.size());
        emit_rk_curve(run_file, qrels, ids, depth, ev_curve);
      }
      if (!report.excluded.empty()) spdlog::warn("{} quer(ies) without judgments excluded", report.excluded.size());
      std::cerr << "R@20 " << format_mean_sd(report.mean_r_at_20, 0.0) << "  nDCG@20 "
                << format_mean_sd(report.mean_ndcg_at_20, 0.0) << "  RP " << format_mean_sd(report.mean_rp, 0.0) << '\n';
    } else if (*rep) {
      std::vector<EvalReport> reports;
      for (const auto& f : rep_files) reports.push_back(EvalReport::load(f));
      auto agg = aggregate_runs(reports);
      if (!rep_out.empty()) write_text(rep_out, [&](std::ostream& o) { agg.write_csv(o); });
      for (const auto& m : agg.metrics) std::cout << m.metric << '\t' << format_mean_sd(m.mean, m.sd) << '\n';
    } else if (*run) {
      auto cfg = ExperimentConfig::load(run_config);
      auto manifest = run_experiment(cfg);
      std::cout << read_file(cfg.output_dir / "summary.txt");
      spdlog::info("outputs in {} (manifest {})", cfg.output_dir.string(), manifest.hash.substr(0, 12));
    } else if (*toy) {
      synthetic::ToyOptions opt;
      opt.seed = toy_seed;
      synthetic::write_toy_dataset(synthetic::make_toy_dataset(opt), toy_out);
      spdlog::info("toy dataset written to {}", toy_out);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
