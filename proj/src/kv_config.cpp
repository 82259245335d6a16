#include "regir/kv_config.hpp"

#include <sstream>

#include "regir/util.hpp"

namespace regir {

KvConfig KvConfig::parse(std::string_view text, const std::string& source) {
  KvConfig cfg;
  cfg.source_ = source;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key=value");
    auto key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    cfg.values_[std::string(key)] = std::string(trim(t.substr(eq + 1)));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string KvConfig::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(source_ + ": missing required key '" + key + "'");
  return it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(source_ + ": key '" + key + "' is not a number: '" + it->second + "'");
  }
}

long KvConfig::get_int(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    long v = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(source_ + ": key '" + key + "' is not an integer: '" + it->second + "'");
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(source_ + ": key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<long> KvConfig::get_int_list(const std::string& key, std::vector<long> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<long> out;
  for (const auto& part : split(it->second, ',')) {
    auto t = trim(part);
    if (t.empty()) continue;
    try {
      out.push_back(std::stol(std::string(t)));
    } catch (const std::exception&) {
      throw Error(source_ + ": key '" + key + "' has a non-integer item '" + std::string(t) + "'");
    }
  }
  return out;
}

std::string KvConfig::dump() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
  return out.str();
}

KvConfig KvConfig::section(const std::string& prefix) const {
  KvConfig out;
  out.source_ = source_;
  const auto p = prefix + ".";
  for (const auto& [k, v] : values_)
    if (k.rfind(p, 0) == 0) out.values_[k.substr(p.size())] = v;
  return out;
}

}  // namespace regir
