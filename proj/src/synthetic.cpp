#include "regir/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "regir/text.hpp"
#include "regir/util.hpp"

namespace regir::synthetic {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

double gaussian(Rng& rng) {
  const double u1 = 1.0 - uniform_real(rng);
  const double u2 = uniform_real(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t dim, double scale) {
  std::vector<double> v(dim);
  for (auto& x : v) x = scale * gaussian(rng);
  return v;
}

std::vector<double> around(const std::vector<double>& center, Rng& rng, double noise) {
  auto v = center;
  for (auto& x : v) x += noise * gaussian(rng);
  return v;
}

/// Fresh pseudo-words, skipping any that collide with a stop-word.
class WordSource {
 public:
  std::string next() {
    for (;;) {
      auto w = pseudo_word(next_++);
      if (!stopwords_.contains(w)) return w;
    }
  }
  std::vector<std::string> take(std::size_t n) {
    std::vector<std::string> out(n);
    for (auto& w : out) w = next();
    return out;
  }

 private:
  StopwordList stopwords_ = StopwordList::english();
  std::size_t next_ = 0;
};

const std::string& pick(const std::vector<std::string>& words, Rng& rng) { return words[uniform_index(rng, words.size())]; }

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += (i ? " " : "") + words[i];
  return out;
}

std::string id(const char* prefix, std::size_t i) {
  std::ostringstream o;
  o << prefix << '-';
  o.width(4);
  o.fill('0');
  o << i;
  return o.str();
}

}  // namespace

std::string pseudo_word(std::size_t index) {
  const std::size_t base = kConsonants.size() * kVowels.size();
  std::string w;
  std::size_t syllables = 3;
  for (std::size_t cap = base * base * base; index >= cap; cap *= base) {
    index -= cap;
    ++syllables;
  }
  for (std::size_t s = 0; s < syllables; ++s) {
    const std::size_t digit = index % base;
    index /= base;
    w += kConsonants[digit / kVowels.size()];
    w += kVowels[digit % kVowels.size()];
  }
  return w;
}

ToyDataset make_toy_dataset(const ToyOptions& opt) {
  Rng rng(derive_seed(opt.seed, "toy"));
  WordSource words;
  const auto english = StopwordList::english();
  const auto& sw = english.words();
  const std::vector<std::string> stop(sw.begin(), sw.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(40, sw.size())));
  const auto background = words.take(opt.background_words);
  std::vector<std::vector<std::string>> topic_words(opt.topics);
  for (auto& t : topic_words) t = words.take(opt.words_per_topic);

  VectorTable wv(opt.dim);
  std::vector<std::vector<double>> centers(opt.topics);
  for (std::size_t t = 0; t < opt.topics; ++t) {
    centers[t] = gaussian_vector(rng, opt.dim, 1.0);
    for (const auto& w : topic_words[t]) wv.add(w, std::span<const double>(around(centers[t], rng, 0.5)));
  }
  for (const auto& w : background) wv.add(w, std::span<const double>(gaussian_vector(rng, opt.dim, 1.0)));
  for (const auto& w : stop) wv.add(w, std::span<const double>(gaussian_vector(rng, opt.dim, 0.3)));

  auto body = [&](std::size_t topic, std::size_t len, const std::vector<std::string>& extra) {
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < len; ++i) {
      const double u = uniform_real(rng);
      toks.push_back(u < 0.35 ? pick(topic_words[topic], rng) : u < 0.65 ? pick(stop, rng) : pick(background, rng));
    }
    for (const auto& e : extra) toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, toks.size() + 1)), e);
    return join(toks);
  };

  std::vector<Document> pool_docs(opt.pool);
  std::vector<std::size_t> pool_topic(opt.pool);
  std::vector<std::vector<std::string>> pool_extra(opt.pool);
  std::vector<std::vector<double>> pool_vec(opt.pool);
  for (std::size_t i = 0; i < opt.pool; ++i) {
    pool_topic[i] = uniform_index(rng, opt.topics);
    pool_docs[i].doc_id = id("uk", i + 1);
    pool_docs[i].tag = CollectionTag::UK;
    pool_docs[i].year = uniform_real(rng) < 0.05 ? 0 : 1992 + static_cast<int>(uniform_index(rng, 25));
    pool_docs[i].title = "Regulations concerning " + pick(topic_words[pool_topic[i]], rng) + " and " +
                         pick(topic_words[pool_topic[i]], rng);
    pool_vec[i] = around(centers[pool_topic[i]], rng, 0.9);
  }

  const std::size_t nq = opt.train + opt.dev + opt.test;
  std::vector<Document> query_docs;
  std::vector<std::vector<double>> query_vec;
  Qrels qrels;
  std::vector<bool> used(opt.pool, false);
  for (std::size_t q = 0; q < nq; ++q) {
    const std::size_t topic = uniform_index(rng, opt.topics);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < opt.pool; ++i)
      if (!used[i] && pool_topic[i] == topic && pool_docs[i].year != 0) candidates.push_back(i);
    if (candidates.empty()) continue;
    const std::size_t n_rel = std::min<std::size_t>(1 + uniform_index(rng, 3), candidates.size());
    Document doc;
    doc.doc_id = id("eu", query_docs.size() + 1);
    doc.tag = CollectionTag::EU;
    std::vector<std::string> anchors;
    int min_year = 3000;
    for (std::size_t r = 0; r < n_rel; ++r) {
      const auto j = r + uniform_index(rng, candidates.size() - r);
      std::swap(candidates[r], candidates[j]);
      const auto d = candidates[r];
      used[d] = true;
      qrels.add(doc.doc_id, pool_docs[d].doc_id);
      min_year = std::min(min_year, pool_docs[d].year);
      if (uniform_real(rng) < 0.75) {
        for (int a = 0; a < 3; ++a) {
          auto w = words.next();
          wv.add(w, std::span<const double>(around(centers[topic], rng, 0.5)));
          anchors.push_back(w);
          pool_extra[d].push_back(w);
        }
      }
    }
    doc.year = std::max(1990, min_year - static_cast<int>(uniform_index(rng, 3)));
    doc.title = "Directive on " + pick(topic_words[topic], rng) + " " + pick(topic_words[topic], rng);
    doc.body = body(topic, opt.doc_len / 2, anchors);
    query_docs.push_back(std::move(doc));
    query_vec.push_back(around(centers[topic], rng, 0.9));
  }
  for (std::size_t i = 0; i < opt.pool; ++i) pool_docs[i].body = body(pool_topic[i], opt.doc_len, pool_extra[i]);

  ToyDataset data;
  VectorTable qv(opt.dim), pv(opt.dim);
  for (std::size_t i = 0; i < query_docs.size(); ++i) qv.add(query_docs[i].doc_id, std::span<const double>(query_vec[i]));
  for (std::size_t i = 0; i < opt.pool; ++i) pv.add(pool_docs[i].doc_id, std::span<const double>(pool_vec[i]));

  // chronological splits: oldest queries train
  std::vector<std::size_t> order(query_docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return query_docs[a].year < query_docs[b].year; });
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& qid = query_docs[order[r]].doc_id;
    if (r < opt.train) data.splits.train.push_back(qid);
    else if (r < opt.train + opt.dev) data.splits.dev.push_back(qid);
    else data.splits.test.push_back(qid);
  }
  for (const auto& d : pool_docs) data.splits.pool.push_back(d.doc_id);

  data.queries = Collection(CollectionTag::EU, std::move(query_docs));
  data.pool = Collection(CollectionTag::UK, std::move(pool_docs));
  data.qrels = std::move(qrels);
  data.word_vectors = WordVectors(std::move(wv));
  data.query_vectors = DocVectorStore(std::move(qv), "synthetic-doc-encoder");
  data.pool_vectors = DocVectorStore(std::move(pv), "synthetic-doc-encoder");
  return data;
}

void write_toy_dataset(const ToyDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_collection(data.queries, dir / "queries.jsonl");
  write_collection(data.pool, dir / "pool.jsonl");
  data.qrels.save(dir / "qrels.tsv");
  save_split_manifest(data.splits, dir / "splits.json");
  save_vector_file(data.word_vectors.table(), "", dir / "word_vectors.txt");
  data.query_vectors.save(dir / "query_vectors.txt");
  data.pool_vectors.save(dir / "pool_vectors.txt");
  write_file(dir / "hyperparams.txt",
             "lr=0.01\nbatch=16\npatience=3\nmax_epochs=6\nbins=10\nhidden=4\nnegatives=3\n");
  write_file(dir / "experiment.cfg",
             "task=EU2UK\n"
             "data.queries=queries.jsonl\n"
             "data.pool=pool.jsonl\n"
             "data.qrels=qrels.tsv\n"
             "data.splits=splits.json\n"
             "prefetch.mode=ensemble\n"
             "prefetch.k=30\n"
             "bm25.tune=true\n"
             "bm25.k1_grid=0.5:3:0.5\n"
             "bm25.b_grid=0:1:0.25\n"
             "dense.word_vectors=word_vectors.txt\n"
             "dense.query_vectors=query_vectors.txt\n"
             "dense.pool_vectors=pool_vectors.txt\n"
             "fusion.tune=true\n"
             "fusion.grid=0:1:0.1\n"
             "rerank.model=drmm\n"
             "rerank.hyperparams=hyperparams.txt\n"
             "rerank.seeds=2\n"
             "filter.years=tune\n"
             "filter.mode=post\n"
             "eval.k_max=60\n"
             "seed=13\n"
             "output.dir=out\n");
}

PlantedCorpus make_planted_corpus(const PlantedOptions& opt) {
  Rng rng(derive_seed(opt.seed, "planted"));
  WordSource words;
  const auto common = words.take(opt.common_words);
  VectorTable wv(opt.dim);
  for (const auto& w : common) wv.add(w, std::span<const double>(gaussian_vector(rng, opt.dim, 1.0)));

  auto text = [&](std::size_t len) {
    std::vector<std::string> toks(len);
    for (auto& t : toks) t = pick(common, rng);
    return toks;
  };

  std::vector<Document> pool(opt.pool);
  std::vector<std::vector<std::string>> pool_tokens(opt.pool);
  for (std::size_t i = 0; i < opt.pool; ++i) {
    pool[i].doc_id = id("d", i + 1);
    pool[i].title = pick(common, rng);
    pool_tokens[i] = text(opt.doc_len);
  }

  PlantedCorpus c;
  const std::size_t nq = opt.train + opt.dev;
  std::vector<Document> queries(nq);
  std::vector<std::size_t> targets(opt.pool);
  for (std::size_t i = 0; i < opt.pool; ++i) targets[i] = i;
  for (std::size_t i = 0; i < nq; ++i) std::swap(targets[i], targets[i + uniform_index(rng, opt.pool - i)]);
  for (std::size_t q = 0; q < nq; ++q) {
    const auto rare = words.next();
    wv.add(rare, std::span<const double>(gaussian_vector(rng, opt.dim, 1.0)));
    const auto target = targets[q];
    pool_tokens[target].push_back(rare);
    pool_tokens[target].push_back(rare);
    auto qt = text(opt.query_len);
    qt.push_back(rare);
    queries[q].doc_id = id("q", q + 1);
    queries[q].title = pick(common, rng);
    queries[q].body = join(qt);
    c.qrels.add(queries[q].doc_id, pool[target].doc_id);
    (q < opt.train ? c.train : c.dev).push_back(queries[q].doc_id);

    std::vector<std::size_t> others;
    while (others.size() + 1 < opt.list_depth) {
      const auto d = uniform_index(rng, opt.pool);
      if (d != target && std::find(others.begin(), others.end(), d) == others.end()) others.push_back(d);
    }
    others.insert(others.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, others.size() + 1)), target);
    std::vector<double> scores(others.size());
    for (auto& s : scores) s = uniform_real(rng);
    std::sort(scores.rbegin(), scores.rend());
    RankedList list{queries[q].doc_id, {}};
    for (std::size_t r = 0; r < others.size(); ++r) list.entries.push_back({pool[others[r]].doc_id, scores[r], "random"});
    c.lists.emplace(list.query_id, std::move(list));
  }
  for (std::size_t i = 0; i < opt.pool; ++i) pool[i].body = join(pool_tokens[i]);

  c.queries = Collection(CollectionTag::EU, std::move(queries));
  c.pool = Collection(CollectionTag::UK, std::move(pool));
  c.word_vectors = WordVectors(std::move(wv));
  return c;
}

}  // namespace regir::synthetic
