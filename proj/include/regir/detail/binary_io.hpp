#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "regir/util.hpp"

// Little helpers for the versioned binary formats (index, checkpoints).
// Native byte order; files are not meant to move across architectures.
namespace regir::detail {

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string what) : data_(bytes), what_(std::move(what)) {}
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    auto n = u64();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  template <class T>
  T pod() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(what_ + " file truncated");
  }
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace regir::detail
