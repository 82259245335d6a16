#include "regir/neural/reranker.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "regir/detail/binary_io.hpp"
#include "regir/fusion.hpp"
#include "regir/util.hpp"

namespace regir::neural {

namespace {

constexpr std::string_view kMagic = "REGIRCKP";

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::size_t feature_bytes(const PairFeatures& f) {
  if (auto* d = std::get_if<DrmmFeatures>(&f.x)) return sizeof(double) * static_cast<std::size_t>(d->histograms.size() + d->idf.size());
  if (auto* p = std::get_if<PacrrFeatures>(&f.x)) return sizeof(double) * static_cast<std::size_t>(p->sim.size() + p->idf_softmax.size());
  return 0;
}

}  // namespace

ModelKind parse_model_kind(std::string_view s) {
  if (s == "drmm" || s == "DRMM") return ModelKind::Drmm;
  if (s == "pacrr" || s == "PACRR") return ModelKind::Pacrr;
  throw Error("unknown model '" + std::string(s) + "' (expected drmm or pacrr)");
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Drmm ? "drmm" : "pacrr"; }

void Hyperparams::validate() const {
  if (!(lr >= 0.0)) throw Error("hyperparams: lr must be >= 0");
  if (batch < 1) throw Error("hyperparams: batch must be >= 1");
  if (patience < 1) throw Error("hyperparams: patience must be >= 1");
  if (max_epochs < 1) throw Error("hyperparams: max_epochs must be >= 1");
  if (bins < 1 || hidden < 1) throw Error("hyperparams: bins and hidden must be >= 1");
  if (kmax < 1 || filters < 1) throw Error("hyperparams: kmax and filters must be >= 1");
  if (kernel_sizes.empty()) throw Error("hyperparams: kernel_sizes must be non-empty");
  for (int n : kernel_sizes)
    if (n < 1) throw Error("hyperparams: kernel sizes must be >= 1");
  if (negatives < 1) throw Error("hyperparams: negatives must be >= 1");
  if (lq_max < 1 || ld_max < 1) throw Error("hyperparams: lq_max and ld_max must be >= 1");
}

Hyperparams Hyperparams::from_kv(const KvConfig& kv) {
  static const std::set<std::string> known{"lr",          "batch",   "patience",  "max_epochs", "bins",
                                           "B",           "hidden",  "kmax",      "kernel_sizes", "filters",
                                           "negatives",   "seed",    "lq_max",    "ld_max"};
  for (const auto& [k, _] : kv.values())
    if (!known.count(k)) throw Error("hyperparams: unknown key '" + k + "'");
  Hyperparams hp;
  hp.lr = kv.get_double("lr", hp.lr);
  hp.batch = static_cast<int>(kv.get_int("batch", hp.batch));
  hp.patience = static_cast<int>(kv.get_int("patience", hp.patience));
  hp.max_epochs = static_cast<int>(kv.get_int("max_epochs", hp.max_epochs));
  hp.bins = static_cast<int>(kv.get_int("B", kv.get_int("bins", hp.bins)));
  hp.hidden = static_cast<int>(kv.get_int("hidden", hp.hidden));
  hp.kmax = static_cast<int>(kv.get_int("kmax", hp.kmax));
  if (kv.has("kernel_sizes")) {
    hp.kernel_sizes.clear();
    for (long n : kv.get_int_list("kernel_sizes", {})) hp.kernel_sizes.push_back(static_cast<int>(n));
  }
  hp.filters = static_cast<int>(kv.get_int("filters", hp.filters));
  hp.negatives = static_cast<int>(kv.get_int("negatives", hp.negatives));
  hp.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(hp.seed)));
  hp.lq_max = static_cast<int>(kv.get_int("lq_max", hp.lq_max));
  hp.ld_max = static_cast<int>(kv.get_int("ld_max", hp.ld_max));
  hp.validate();
  return hp;
}

Hyperparams Hyperparams::load(const std::filesystem::path& path) { return from_kv(KvConfig::load(path)); }

KvConfig Hyperparams::to_kv() const {
  KvConfig kv;
  kv.set("lr", format_double(lr));
  kv.set("batch", std::to_string(batch));
  kv.set("patience", std::to_string(patience));
  kv.set("max_epochs", std::to_string(max_epochs));
  kv.set("bins", std::to_string(bins));
  kv.set("hidden", std::to_string(hidden));
  kv.set("kmax", std::to_string(kmax));
  kv.set("kernel_sizes", join_ints(kernel_sizes));
  kv.set("filters", std::to_string(filters));
  kv.set("negatives", std::to_string(negatives));
  kv.set("seed", std::to_string(seed));
  kv.set("lq_max", std::to_string(lq_max));
  kv.set("ld_max", std::to_string(ld_max));
  return kv;
}

NeuralReranker::NeuralReranker(ModelKind kind, Hyperparams hp) : kind_(kind), hp_(std::move(hp)) {
  hp_.validate();
  std::size_t n = 0;
  if (kind_ == ModelKind::Drmm) {
    drmm_.emplace(DrmmArchitecture::Config{hp_.bins, hp_.hidden});
    n = drmm_->num_params();
  } else {
    pacrr_.emplace(PacrrArchitecture::Config{hp_.kmax, hp_.kernel_sizes, hp_.filters, hp_.lq_max, hp_.ld_max});
    n = pacrr_->num_params();
  }
  params_.assign(n + 2, 0.0);
  params_[w_r_index()] = 1.0;
  params_[w_p_index()] = 1.0;
}

void NeuralReranker::set_fusion_weights(double w_r, double w_p) {
  params_[w_r_index()] = w_r;
  params_[w_p_index()] = w_p;
}

void NeuralReranker::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init"));
  std::span<double> model(params_.data(), model_param_count());
  if (drmm_) drmm_->initialize(model, rng);
  else pacrr_->initialize(model, rng);
  set_fusion_weights(1.0, 1.0);
}

PairFeatures NeuralReranker::featurize(const TokenMatrix& query, std::span<const double> query_idf,
                                       const TokenMatrix& doc) const {
  PairFeatures f;
  if (query.size() == 0) return f;
  if (drmm_) {
    f.x = drmm_->featurize(query, query_idf, doc);
  } else {
    if (doc.size() == 0) return f;
    f.x = pacrr_->featurize(query, query_idf, doc);
  }
  return f;
}

double NeuralReranker::neural_score(std::span<const double> params, const PairFeatures& x) const {
  if (x.empty()) return 0.0;
  if (drmm_) return drmm_->forward(params, std::get<DrmmFeatures>(x.x));
  return pacrr_->forward(params, std::get<PacrrFeatures>(x.x));
}

double NeuralReranker::neural_grad(std::span<const double> params, const PairFeatures& x, double d_score,
                                   std::span<double> grad) const {
  if (x.empty()) return 0.0;
  if (drmm_) {
    DrmmArchitecture::Cache cache;
    const auto& f = std::get<DrmmFeatures>(x.x);
    double s = drmm_->forward(params, f, &cache);
    drmm_->backward(params, f, cache, d_score, grad);
    return s;
  }
  PacrrArchitecture::Cache cache;
  const auto& f = std::get<PacrrFeatures>(x.x);
  double s = pacrr_->forward(params, f, &cache);
  pacrr_->backward(params, f, cache, d_score, grad);
  return s;
}

double NeuralReranker::rel(std::span<const double> params, const PairFeatures& x, double s_p) const {
  return rel_score(neural_score(params, x), s_p, params[w_r_index()], params[w_p_index()]);
}

double NeuralReranker::triple_loss(std::span<const double> params, const PairFeatures& pos, double pos_sp,
                                   const PairFeatures& neg, double neg_sp, std::span<double> grad) const {
  const double w_r = params[w_r_index()], w_p = params[w_p_index()];
  const double sr_pos = neural_score(params, pos);
  const double sr_neg = neural_score(params, neg);
  const double loss = hinge_loss(rel_score(sr_pos, pos_sp, w_r, w_p), rel_score(sr_neg, neg_sp, w_r, w_p));
  if (grad.empty() || loss <= 0.0) return loss;
  // d loss / d rel_pos = -1, d loss / d rel_neg = +1
  neural_grad(params, pos, -w_r, grad);
  neural_grad(params, neg, w_r, grad);
  grad[w_r_index()] += sr_neg - sr_pos;
  grad[w_p_index()] += neg_sp - pos_sp;
  return loss;
}

std::string NeuralReranker::serialize() const {
  detail::Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kFormatVersion);
  w.u32(kind_ == ModelKind::Drmm ? 0u : 1u);
  w.str(hp_.to_kv().dump());
  w.u64(params_.size());
  for (double v : params_) w.f64(v);
  return w.take();
}

void NeuralReranker::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

NeuralReranker NeuralReranker::deserialize(std::string_view bytes) {
  detail::Reader r(bytes, "checkpoint");
  std::string magic(kMagic.size(), '\0');
  r.raw(magic.data(), magic.size());
  if (magic != kMagic) throw Error("not a regir checkpoint");
  const auto version = r.u32();
  if (version != kFormatVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                std::to_string(kFormatVersion) + ")");
  const auto kind = r.u32();
  if (kind > 1) throw Error("checkpoint: unknown model kind");
  auto hp = Hyperparams::from_kv(KvConfig::parse(r.str(), "checkpoint"));
  NeuralReranker model(kind == 0 ? ModelKind::Drmm : ModelKind::Pacrr, hp);
  const auto n = r.u64();
  if (n != model.params_.size())
    throw Error("checkpoint: parameter count " + std::to_string(n) + " does not match the architecture (" +
                std::to_string(model.params_.size()) + ")");
  for (auto& v : model.params_) v = r.f64();
  if (!r.done()) throw Error("checkpoint: trailing bytes");
  return model;
}

NeuralReranker NeuralReranker::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

PairFeaturizer::PairFeaturizer(Resources res, const NeuralReranker& model, std::size_t cache_bytes)
    : res_(res), model_(&model), budget_(cache_bytes) {
  if (!res_.queries || !res_.pool || !res_.pipeline || !res_.query_embedder || !res_.doc_embedder)
    throw Error("featurizer: missing resources");
  if (res_.query_embedder->dim() != res_.doc_embedder->dim())
    throw Error("featurizer: query and document embeddings differ in dimensionality");
}

std::pair<TokenMatrix, std::vector<double>> PairFeaturizer::query_input(const std::string& query_id) {
  const auto& q = res_.queries->at(query_id);
  auto tokens = res_.pipeline->process(q.full_text());
  auto m = res_.query_embedder->embed(query_id, tokens);
  std::vector<double> idf;
  idf.reserve(m.size());
  for (const auto& t : m.terms) idf.push_back(res_.pipeline->idf().idf(t));
  return {std::move(m), std::move(idf)};
}

TokenMatrix PairFeaturizer::doc_input(const std::string& doc_id) {
  const auto& d = res_.pool->at(doc_id);
  return res_.doc_embedder->embed(doc_id, res_.pipeline->process(d.full_text()));
}

std::shared_ptr<const PairFeatures> PairFeaturizer::features(const std::string& query_id, const std::string& doc_id) {
  auto key = std::make_pair(query_id, doc_id);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  std::shared_ptr<const std::pair<TokenMatrix, std::vector<double>>> query;
  {
    std::lock_guard lock(mutex_);
    if (auto it = query_cache_.find(query_id); it != query_cache_.end()) query = it->second;
  }
  if (!query) {
    query = std::make_shared<const std::pair<TokenMatrix, std::vector<double>>>(query_input(query_id));
    std::lock_guard lock(mutex_);
    query_cache_.emplace(query_id, query);
  }
  auto f = std::make_shared<const PairFeatures>(model_->featurize(query->first, query->second, doc_input(doc_id)));
  std::lock_guard lock(mutex_);
  const auto bytes = feature_bytes(*f);
  if (used_ + bytes <= budget_) {
    auto [it, inserted] = cache_.emplace(std::move(key), f);
    if (inserted) used_ += bytes;
    return it->second;
  }
  return f;
}

RankedList rerank(const NeuralReranker& model, PairFeaturizer& featurizer, const RankedList& prefetched) {
  const auto normalized = normalize_scores(prefetched);
  const std::size_t n = normalized.entries.size();
  std::vector<double> rel(n);
  parallel_for(n, [&](std::size_t i) {
    auto f = featurizer.features(prefetched.query_id, normalized.entries[i].doc_id);
    rel[i] = model.rel(*f, normalized.entries[i].score);
  });
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rel[a] > rel[b]; });
  RankedList out;
  out.query_id = prefetched.query_id;
  out.entries.reserve(n);
  const std::string stage(to_string(model.kind()));
  for (auto i : order) out.entries.push_back({normalized.entries[i].doc_id, rel[i], stage});
  return out;
}

RunFile rerank_run(const NeuralReranker& model, PairFeaturizer& featurizer, const RunFile& prefetched) {
  RunFile out;
  for (const auto& [qid, list] : prefetched) out.emplace(qid, rerank(model, featurizer, list));
  return out;
}

}  // namespace regir::neural
