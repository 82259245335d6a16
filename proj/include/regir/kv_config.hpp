#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regir {

/// Flat `key=value` text with dotted section prefixes (`prefetch.mode=bm25`).
/// '#' starts a comment line. Later keys override earlier ones.
class KvConfig {
 public:
  KvConfig() = default;
  static KvConfig parse(std::string_view text, const std::string& source = "<config>");
  static KvConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get(const std::string& key, const std::string& fallback) const;
  /// Throws when missing.
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_int_list(const std::string& key, std::vector<long> fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Canonical text (sorted keys); equal configs serialize identically.
  std::string dump() const;
  /// Keys under `prefix.` with the prefix stripped.
  KvConfig section(const std::string& prefix) const;

 private:
  std::map<std::string, std::string> values_;
  std::string source_ = "<config>";
};

}  // namespace regir
