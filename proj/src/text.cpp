#include "regir/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "regir/util.hpp"

namespace regir {

namespace {

// ASCII base letters for U+0100..U+017F (Latin Extended-A), run-length coded.
struct Run {
  const char* base;
  int count;
};
constexpr Run kLatinExtA[] = {
    {"a", 6}, {"c", 8}, {"d", 4}, {"e", 10}, {"g", 8}, {"h", 4}, {"i", 10}, {"ij", 2},
    {"j", 2}, {"k", 3}, {"l", 10}, {"n", 9}, {"o", 6}, {"oe", 2}, {"r", 6}, {"s", 8},
    {"t", 6}, {"u", 12}, {"w", 2}, {"y", 3}, {"z", 6}, {"s", 1},
};

// U+00C0..U+00FF. nullptr marks the two math operators (x and division sign).
constexpr const char* kLatin1[64] = {
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", nullptr, "o", "u", "u", "u", "u", "y", "th", "ss",
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", nullptr, "o", "u", "u", "u", "u", "y", "th", "y",
};

const std::array<const char*, 128>& latin_ext_a() {
  static const std::array<const char*, 128> table = [] {
    std::array<const char*, 128> t{};
    std::size_t i = 0;
    for (const auto& run : kLatinExtA)
      for (int k = 0; k < run.count; ++k) t[i++] = run.base;
    return t;
  }();
  return table;
}

// Decodes one code point; malformed bytes decode as U+FFFD and consume one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
  auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  unsigned char c = byte(pos);
  if (c < 0x80) {
    ++pos;
    return c;
  }
  int extra = (c >= 0xF8) ? -1 : (c >= 0xF0) ? 3 : (c >= 0xE0) ? 2 : (c >= 0xC0) ? 1 : -1;
  if (extra < 0 || pos + extra >= s.size()) {
    ++pos;
    return 0xFFFD;
  }
  char32_t cp = c & (0x3F >> extra);
  for (int k = 1; k <= extra; ++k) {
    unsigned char cc = byte(pos + k);
    if ((cc & 0xC0) != 0x80) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_boundary(char32_t cp) {
  if (cp < 0x80) return !(std::isalnum(static_cast<int>(cp)));
  if (cp <= 0xBF) return true;                    // C1 controls, nbsp, Latin-1 symbols
  if (cp == 0xD7 || cp == 0xF7) return true;      // multiplication / division signs
  if (cp >= 0x2000 && cp <= 0x2BFF) return true;  // general punctuation .. misc symbols
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return true;
  if (cp == 0xFEFF || cp == 0xFFFD) return true;
  return false;
}

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

TokenList tokenize(std::string_view text) {
  TokenList out;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !all_digits(current)) out.push_back(current);
    current.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = next_code_point(text, pos);
    if (is_boundary(cp)) {
      flush();
      continue;
    }
    if (cp < 0x80) {
      current.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
    } else if (cp >= 0xC0 && cp <= 0xFF) {
      current += kLatin1[cp - 0xC0];
    } else if (cp >= 0x100 && cp <= 0x17F) {
      current += latin_ext_a()[cp - 0x100];
    } else {
      append_utf8(current, cp);
    }
  }
  flush();
  return out;
}

StopwordList::StopwordList(std::vector<std::string> words) {
  for (auto& w : words) {
    auto t = std::string(trim(w));
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!t.empty()) set_.insert(std::move(t));
  }
  words_.assign(set_.begin(), set_.end());
  std::sort(words_.begin(), words_.end());
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stop-word list " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    words.emplace_back(t);
  }
  return StopwordList(std::move(words));
}

IdfTable IdfTable::build(std::span<const TokenList> docs, const StopwordList& stopwords) {
  if (docs.empty()) throw Error("cannot build idf table: empty collection");
  IdfTable table;
  table.doc_count_ = docs.size();
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& tok : doc)
      if (seen.insert(tok).second) ++table.df_[tok];
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& w : stopwords.words()) {
    auto it = table.df_.find(w);
    if (it == table.df_.end()) continue;
    sum += table.idf_for_df(it->second);
    ++n;
  }
  table.stopword_avg_idf_ = n ? sum / static_cast<double>(n) : 0.0;
  return table;
}

IdfTable IdfTable::from_stats(std::size_t doc_count, std::unordered_map<std::string, std::uint32_t> df,
                              double stopword_avg_idf) {
  IdfTable table;
  table.doc_count_ = doc_count;
  table.df_ = std::move(df);
  table.stopword_avg_idf_ = stopword_avg_idf;
  return table;
}

double IdfTable::idf_for_df(std::uint32_t df) const {
  const double n = static_cast<double>(doc_count_);
  const double d = static_cast<double>(df);
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double IdfTable::idf(std::string_view term) const { return idf_for_df(df(term)); }

std::uint32_t IdfTable::df(std::string_view term) const {
  auto it = df_.find(std::string(term));
  return it == df_.end() ? 0 : it->second;
}

TokenList denoise(const TokenList& tokens, const IdfTable& idf, const StopwordList& stopwords, bool idf_filter) {
  TokenList out;
  out.reserve(tokens.size());
  const double threshold = idf.stopword_avg_idf();
  for (const auto& tok : tokens) {
    if (stopwords.contains(tok)) continue;
    if (idf_filter && idf.idf(tok) < threshold) continue;
    out.push_back(tok);
  }
  return out;
}

TextPipeline TextPipeline::fit(std::span<const TokenList> pool_tokens, StopwordList stopwords, bool idf_filter) {
  auto table = IdfTable::build(pool_tokens, stopwords);
  return TextPipeline(std::move(stopwords), std::move(table), idf_filter);
}

}  // namespace regir
