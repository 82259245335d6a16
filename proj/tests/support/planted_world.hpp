#pragma once

#include <memory>

#include "regir/lexical.hpp"
#include "regir/neural/reranker.hpp"
#include "regir/synthetic.hpp"

namespace regir::testing {

/// A planted corpus with its text pipeline and embedder, ready for featurizing.
struct PlantedWorld {
  synthetic::PlantedCorpus corpus;
  TextPipeline pipeline;
  std::unique_ptr<neural::WordVectorEmbedder> embedder;

  explicit PlantedWorld(const synthetic::PlantedOptions& opt) : corpus(synthetic::make_planted_corpus(opt)) {
    std::vector<TokenList> raw;
    for (const auto& d : corpus.pool) raw.push_back(tokenize(d.full_text()));
    pipeline = TextPipeline::fit(raw, StopwordList::english(), true);
    embedder = std::make_unique<neural::WordVectorEmbedder>(corpus.word_vectors);
  }

  neural::PairFeaturizer::Resources resources() const {
    return {&corpus.queries, &corpus.pool, &pipeline, embedder.get(), embedder.get()};
  }

  static synthetic::PlantedOptions small() {
    synthetic::PlantedOptions opt;
    opt.pool = 60;
    opt.train = 8;
    opt.dev = 4;
    opt.list_depth = 10;
    opt.common_words = 40;
    opt.doc_len = 20;
    opt.query_len = 6;
    opt.dim = 6;
    return opt;
  }
};

}  // namespace regir::testing
