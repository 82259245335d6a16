#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "regir/corpus.hpp"
#include "regir/dense.hpp"
#include "regir/ranked_list.hpp"

namespace regir::synthetic {

/// Topic-structured toy collections shaped like the EU/UK data: queries share
/// topic vocabulary and a few anchor terms with their relevant pool documents,
/// relevant documents are dated a little after their query.
struct ToyOptions {
  std::uint64_t seed = 7;
  std::size_t pool = 240;
  std::size_t train = 40;
  std::size_t dev = 15;
  std::size_t test = 15;
  std::size_t topics = 12;
  std::size_t words_per_topic = 25;
  std::size_t background_words = 200;
  std::size_t doc_len = 120;
  std::size_t dim = 16;
};

struct ToyDataset {
  Collection queries;
  Collection pool;
  Qrels qrels;
  SplitManifest splits;
  WordVectors word_vectors;
  DocVectorStore query_vectors;
  DocVectorStore pool_vectors;
};

ToyDataset make_toy_dataset(const ToyOptions& options = {});

/// Writes queries.jsonl, pool.jsonl, qrels.tsv, splits.json, word_vectors.txt,
/// query_vectors.txt, pool_vectors.txt, hyperparams.txt and experiment.cfg.
void write_toy_dataset(const ToyDataset& data, const std::filesystem::path& dir);

/// Pool where each query's single relevant document is the only one sharing a
/// rare query term; everything else is common vocabulary. The pre-fetched
/// lists carry random scores, so only the term match separates positives.
struct PlantedOptions {
  std::uint64_t seed = 11;
  std::size_t pool = 500;
  std::size_t train = 60;
  std::size_t dev = 20;
  std::size_t list_depth = 30;
  std::size_t common_words = 150;
  std::size_t doc_len = 60;
  std::size_t query_len = 20;
  std::size_t dim = 8;
};

struct PlantedCorpus {
  Collection queries;
  Collection pool;
  Qrels qrels;
  std::vector<std::string> train;
  std::vector<std::string> dev;
  RunFile lists;
  WordVectors word_vectors;
};

PlantedCorpus make_planted_corpus(const PlantedOptions& options = {});

/// Pronounceable pseudo-word for an index (distinct indices, distinct words).
std::string pseudo_word(std::size_t index);

}  // namespace regir::synthetic
