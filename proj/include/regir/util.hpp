#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace regir {

/// Base class for every error the engine reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file could not be parsed. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Worker count for intra-stage parallelism. Honors REGIR_THREADS.
std::size_t thread_count();

/// Runs fn(i) for i in [0, n) across thread_count() workers. Exceptions from
/// workers are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Seeded generator. mt19937_64 output is fully specified by the standard,
/// the helpers below avoid the implementation-defined std distributions.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n) by rejection sampling.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
/// Uniform real in [0, 1).
double uniform_real(Rng& rng);
/// Derives an independent stage seed from a root seed and a label.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

/// Hex-encoded SHA-256 of a byte string / a file's contents.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Parses "lo:hi:step" into an inclusive arithmetic grid.
std::vector<double> parse_range(std::string_view spec);
/// Inclusive grid lo, lo+step, ..., hi (endpoint snapped to hi).
std::vector<double> make_range(double lo, double hi, double step);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace regir
