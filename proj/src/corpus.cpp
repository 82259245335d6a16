#include "regir/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <regex>
#include <sstream>

#include "regir/util.hpp"

namespace regir {

using nlohmann::json;

namespace {

int current_year() {
  using namespace std::chrono;
  return static_cast<int>(year_month_day{floor<days>(system_clock::now())}.year());
}

bool plausible_year(int y) { return y > 1800 && y <= current_year(); }

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

}  // namespace

CollectionTag parse_collection_tag(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "EU") return CollectionTag::EU;
  if (up == "UK") return CollectionTag::UK;
  throw Error("unknown collection tag '" + std::string(s) + "' (expected EU or UK)");
}

std::string_view to_string(CollectionTag tag) { return tag == CollectionTag::EU ? "EU" : "UK"; }

int resolve_year(std::optional<int> explicit_year, std::string_view title) {
  if (explicit_year) return *explicit_year;
  static const std::regex kYear(R"((^|[^0-9])((19|20)[0-9]{2})([^0-9]|$))");
  std::match_results<std::string_view::const_iterator> m;
  auto begin = title.begin();
  while (std::regex_search(begin, title.end(), m, kYear)) {
    int y = std::stoi(m[2].str());
    if (plausible_year(y)) return y;
    begin = m[2].second;
  }
  return 0;
}

Collection::Collection(CollectionTag tag, std::vector<Document> docs) : tag_(tag), docs_(std::move(docs)) {
  by_id_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    auto& d = docs_[i];
    d.tag = tag;
    if (d.doc_id.empty()) throw Error("document #" + std::to_string(i + 1) + " has an empty doc_id");
    if (trim(d.title).empty()) throw Error("document '" + d.doc_id + "' has an empty title");
    if (d.year != 0 && !plausible_year(d.year))
      throw Error("document '" + d.doc_id + "' has implausible year " + std::to_string(d.year));
    if (!by_id_.emplace(d.doc_id, i).second) throw Error("duplicate doc_id '" + d.doc_id + "'");
  }
}

const Document* Collection::find(std::string_view doc_id) const {
  auto it = by_id_.find(std::string(doc_id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& Collection::at(std::string_view doc_id) const {
  if (const auto* d = find(doc_id)) return *d;
  throw Error("unknown doc_id '" + std::string(doc_id) + "'");
}

int Collection::year_of(std::string_view doc_id) const {
  const auto* d = find(doc_id);
  return d ? d->year : 0;
}

std::size_t Collection::degenerate_count() const {
  return static_cast<std::size_t>(std::count_if(docs_.begin(), docs_.end(), [](const Document& d) { return d.body.empty(); }));
}

Collection Collection::subset(const std::vector<std::string>& ids) const {
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(at(id));
  return Collection(tag_, std::move(out));
}

Collection ingest_collection(const std::filesystem::path& path, CollectionTag tag) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open collection " + path.string());
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  const auto src = path.string();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(src, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(src, line_no, "record is not a JSON object");
    Document d;
    for (const char* key : {"doc_id", "title", "body"}) {
      auto it = rec.find(key);
      if (it == rec.end()) throw ParseError(src, line_no, std::string("missing required field '") + key + "'");
      if (!it->is_string()) throw ParseError(src, line_no, std::string("field '") + key + "' must be a string");
    }
    d.doc_id = rec["doc_id"].get<std::string>();
    d.title = rec["title"].get<std::string>();
    d.body = rec["body"].get<std::string>();
    std::optional<int> year;
    if (auto it = rec.find("year"); it != rec.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw ParseError(src, line_no, "field 'year' must be an integer");
      year = it->get<int>();
    }
    d.year = resolve_year(year, d.title);
    if (auto [it, fresh] = first_line.emplace(d.doc_id, line_no); !fresh)
      throw ParseError(src, line_no,
                       "duplicate doc_id '" + d.doc_id + "' (first seen on line " + std::to_string(it->second) + ")");
    docs.push_back(std::move(d));
  }
  try {
    Collection c(tag, std::move(docs));
    if (auto n = c.degenerate_count()) spdlog::warn("{}: {} document(s) with empty body", src, n);
    return c;
  } catch (const Error& e) {
    throw Error(src + ": " + e.what());
  }
}

void write_collection(const Collection& collection, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& d : collection) {
    json rec = {{"doc_id", d.doc_id}, {"title", d.title}, {"body", d.body}};
    if (d.year != 0) rec["year"] = d.year;
    out << rec.dump() << '\n';
  }
  write_file(path, out.str());
}

CorpusStats corpus_stats(const Collection& collection) {
  CorpusStats s;
  s.doc_count = collection.size();
  std::vector<std::size_t> lengths;
  lengths.reserve(collection.size());
  for (const auto& d : collection) {
    lengths.push_back(whitespace_tokens(d.title).size() + whitespace_tokens(d.body).size());
    if (d.body.empty()) ++s.empty_body_count;
    if (d.year == 0)
      ++s.unknown_year_count;
    else
      ++s.year_histogram[d.year];
  }
  if (!lengths.empty()) {
    s.mean_tokens = static_cast<double>(std::accumulate(lengths.begin(), lengths.end(), std::size_t{0})) /
                    static_cast<double>(lengths.size());
    std::sort(lengths.begin(), lengths.end());
    const auto n = lengths.size();
    s.median_tokens = n % 2 ? static_cast<double>(lengths[n / 2])
                            : 0.5 * static_cast<double>(lengths[n / 2 - 1] + lengths[n / 2]);
  }
  return s;
}

std::string to_json(const CorpusStats& s) {
  json hist = json::object();
  for (const auto& [y, n] : s.year_histogram) hist[std::to_string(y)] = n;
  json j = {{"doc_count", s.doc_count},       {"mean_tokens", s.mean_tokens},
            {"median_tokens", s.median_tokens}, {"empty_body_count", s.empty_body_count},
            {"unknown_year_count", s.unknown_year_count}, {"year_histogram", hist}};
  return j.dump(2);
}

const RelevantSet& Qrels::relevant(std::string_view query_id) const {
  static const RelevantSet kEmpty;
  auto it = entries_.find(std::string(query_id));
  return it == entries_.end() ? kEmpty : it->second;
}

bool Qrels::has(std::string_view query_id) const { return !relevant(query_id).empty(); }

double Qrels::mean_relevant(const std::vector<std::string>& query_ids) const {
  if (query_ids.empty()) return 0.0;
  double total = 0.0;
  for (const auto& q : query_ids) total += static_cast<double>(relevant(q).size());
  return total / static_cast<double>(query_ids.size());
}

void Qrels::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (const auto& [q, docs] : entries_)
    for (const auto& d : docs) out << q << '\t' << d << '\n';
  write_file(path, out.str());
}

Qrels load_qrels(const std::filesystem::path& path, const Collection* queries, const Collection* pool) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open qrels " + path.string());
  Qrels qrels;
  std::vector<std::string> unknown;
  std::string line;
  std::size_t line_no = 0, rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cols = split(t, '\t');
    if (cols.size() != 2) throw ParseError(path.string(), line_no, "expected query_id<TAB>doc_id");
    auto q = std::string(trim(cols[0])), d = std::string(trim(cols[1]));
    if (q.empty() || d.empty()) throw ParseError(path.string(), line_no, "empty id");
    bool ok = true;
    if (queries && !queries->contains(q)) {
      unknown.push_back("line " + std::to_string(line_no) + ": query '" + q + "'");
      ok = false;
    }
    if (pool && !pool->contains(d)) {
      unknown.push_back("line " + std::to_string(line_no) + ": document '" + d + "'");
      ok = false;
    }
    if (ok) qrels.add(q, d);
    ++rows;
  }
  if (rows == 0) throw Error("qrels file " + path.string() + " is empty");
  if (!unknown.empty()) {
    std::string msg = path.string() + ": " + std::to_string(unknown.size()) + " row(s) reference unknown ids";
    for (std::size_t i = 0; i < unknown.size() && i < 20; ++i) msg += "\n  " + unknown[i];
    if (unknown.size() > 20) msg += "\n  ...";
    throw Error(msg);
  }
  return qrels;
}

const std::vector<std::string>& SplitManifest::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  if (name == "pool") return pool;
  throw Error("unknown split '" + std::string(name) + "'");
}

SplitManifest load_split_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  SplitManifest m;
  for (const char* key : {"train", "dev", "test", "pool"}) {
    if (!j.contains(key) || !j[key].is_array()) throw ParseError(path.string(), 0, std::string("missing list '") + key + "'");
  }
  m.train = j["train"].get<std::vector<std::string>>();
  m.dev = j["dev"].get<std::vector<std::string>>();
  m.test = j["test"].get<std::vector<std::string>>();
  m.pool = j["pool"].get<std::vector<std::string>>();
  return m;
}

void save_split_manifest(const SplitManifest& m, const std::filesystem::path& path) {
  json j = {{"train", m.train}, {"dev", m.dev}, {"test", m.test}, {"pool", m.pool}};
  write_file(path, j.dump(1) + "\n");
}

std::vector<std::string> validate_split(const SplitManifest& m, const Collection& queries, const Collection& pool,
                                        const Qrels& qrels) {
  std::vector<std::string> warnings;
  std::unordered_map<std::string, std::string> owner;
  for (const char* name : {"train", "dev", "test"}) {
    for (const auto& id : m.split(name)) {
      if (!queries.contains(id)) throw Error(std::string(name) + " query '" + id + "' not in query collection");
      if (auto [it, fresh] = owner.emplace(id, name); !fresh)
        throw Error("query '" + id + "' appears in both " + it->second + " and " + name);
      if (qrels.relevant(id).empty()) warnings.push_back(std::string(name) + " query '" + id + "' has no relevant documents");
    }
  }
  for (const auto& id : m.pool)
    if (!pool.contains(id)) throw Error("pool id '" + id + "' not in pool collection");

  auto year_range = [&](const std::vector<std::string>& ids) {
    int lo = 0, hi = 0;
    for (const auto& id : ids) {
      int y = queries.year_of(id);
      if (y == 0) continue;
      lo = lo == 0 ? y : std::min(lo, y);
      hi = std::max(hi, y);
    }
    return std::pair{lo, hi};
  };
  auto [train_lo, train_hi] = year_range(m.train);
  auto [dev_lo, dev_hi] = year_range(m.dev);
  auto [test_lo, test_hi] = year_range(m.test);
  (void)train_lo;
  (void)test_hi;
  if (train_hi && dev_lo && train_hi > dev_lo)
    warnings.push_back("chronology: latest train year " + std::to_string(train_hi) + " > earliest dev year " +
                       std::to_string(dev_lo));
  if (dev_lo && test_lo && dev_lo > test_lo)
    warnings.push_back("chronology: earliest dev year " + std::to_string(dev_lo) + " > earliest test year " +
                       std::to_string(test_lo));
  (void)dev_hi;
  for (const auto& w : warnings) spdlog::warn("split manifest: {}", w);
  return warnings;
}

namespace {

std::vector<json> read_json_records(const std::filesystem::path& path) {
  std::vector<json> out;
  auto read_one = [&](const std::filesystem::path& file) {
    std::string text = read_file(file);
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
      for (auto& rec : json::parse(text)) out.push_back(std::move(rec));
      return;
    }
    if (first != std::string::npos && text[first] == '{') {
      // A single object, or JSON-lines.
      try {
        out.push_back(json::parse(text));
        return;
      } catch (const json::parse_error&) {
      }
    }
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        out.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw ParseError(file.string(), line_no, e.what());
      }
    }
  };
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(path)) {
      auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".json" || ext == ".jsonl")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) read_one(f);
  } else {
    read_one(path);
  }
  return out;
}

const json* first_key(const json& rec, const std::vector<std::string>& keys) {
  for (const auto& k : keys)
    if (auto it = rec.find(k); it != rec.end() && !it->is_null()) return &*it;
  return nullptr;
}

std::string as_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& item : v) {
      auto t = as_text(item);
      if (t.empty()) continue;
      if (!out.empty()) out += '\n';
      out += t;
    }
    return out;
  }
  if (v.is_number()) return v.dump();
  return {};
}

}  // namespace

std::vector<Document> convert_records(const std::filesystem::path& path, CollectionTag tag,
                                      const ConvertOptions& options) {
  std::vector<Document> docs;
  std::size_t n = 0;
  for (const auto& rec : read_json_records(path)) {
    ++n;
    if (!rec.is_object()) throw ParseError(path.string(), n, "record is not an object");
    const json* id = first_key(rec, options.id_keys);
    const json* title = first_key(rec, options.title_keys);
    if (!id) throw ParseError(path.string(), n, "record has no id field");
    if (!title) throw ParseError(path.string(), n, "record has no title field");
    Document d;
    d.doc_id = id->is_string() ? id->get<std::string>() : id->dump();
    d.title = as_text(*title);
    d.tag = tag;
    for (const auto& k : options.body_keys) {
      if (auto it = rec.find(k); it != rec.end() && !it->is_null()) {
        auto t = as_text(*it);
        if (t.empty()) continue;
        if (!d.body.empty()) d.body += '\n';
        d.body += t;
      }
    }
    std::optional<int> year;
    if (const json* y = first_key(rec, options.year_keys)) {
      if (y->is_number_integer()) {
        year = y->get<int>();
      } else if (y->is_string()) {
        auto s = y->get<std::string>();
        if (s.size() >= 4 && std::all_of(s.begin(), s.begin() + 4, ::isdigit)) year = std::stoi(s.substr(0, 4));
      }
      if (year && !plausible_year(*year)) year.reset();
    }
    d.year = resolve_year(year, d.title);
    docs.push_back(std::move(d));
  }
  return docs;
}

Qrels convert_relevance(const std::filesystem::path& path, const ConvertOptions& options) {
  Qrels qrels;
  for (const auto& rec : read_json_records(path)) {
    const json* id = first_key(rec, options.id_keys);
    const json* rel = first_key(rec, options.relevant_keys);
    if (!id || !rel) continue;
    auto qid = id->is_string() ? id->get<std::string>() : id->dump();
    if (rel->is_array())
      for (const auto& d : *rel) qrels.add(qid, d.is_string() ? d.get<std::string>() : d.dump());
    else if (rel->is_string())
      qrels.add(qid, rel->get<std::string>());
  }
  return qrels;
}

}  // namespace regir
