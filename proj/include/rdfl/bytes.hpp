#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdfl/error.hpp"

namespace rdfl {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

/// Little-endian append-only encoder.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }

  void u32(std::uint32_t v) { put_le(v); }

  void u64(std::uint64_t v) { put_le(v); }

  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

  /// u32 length prefix followed by the bytes.
  void prefixed(ByteView bytes) {
    u32(static_cast<std::uint32_t>(bytes.size()));
    raw(bytes);
  }

  void prefixed(std::string_view s) { prefixed(as_bytes(s)); }

  Bytes take() && { return std::move(out_); }

  std::size_t size() const { return out_.size(); }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes out_;
};

/// Bounds-checked little-endian decoder; every short read is a decode-error.
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return take(1)[0]; }

  std::uint32_t u32() { return get_le<std::uint32_t>(); }

  std::uint64_t u64() { return get_le<std::uint64_t>(); }

  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  ByteView take(std::size_t n) {
    require(n <= in_.size() - pos_, ErrorCode::DecodeError, "truncated input");
    ByteView view = in_.subspan(pos_, n);
    pos_ += n;
    return view;
  }

  Bytes prefixed_bytes() {
    const auto n = u32();
    auto view = take(n);
    return {view.begin(), view.end()};
  }

  std::string prefixed_string() {
    const auto n = u32();
    auto view = take(n);
    return {reinterpret_cast<const char*>(view.data()), view.size()};
  }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  template <typename T>
  T get_le() {
    auto view = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(view[i]) << (8 * i);
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace rdfl
