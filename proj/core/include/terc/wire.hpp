/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "terc/error.hpp"

// Little-endian fixed-width encoding primitives. Every on-disk integer in
// the container, store and section formats goes through these, so files are
// byte-identical across platforms.

namespace terc::wire {

template <typename T>
concept WireInt = std::is_integral_v<T> && !std::is_same_v<T, bool>;

template <WireInt T>
inline void store_le(std::byte* dst, T value) {
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<std::byte>((u >> (8 * i)) & 0xffu);
  }
}

template <WireInt T>
[[nodiscard]] inline T load_le(const std::byte* src) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(std::to_integer<std::uint8_t>(src[i])) << (8 * i);
  }
  return static_cast<T>(u);
}

inline void store_le_f32(std::byte* dst, float value) {
  store_le<std::uint32_t>(dst, std::bit_cast<std::uint32_t>(value));
}
inline void store_le_f64(std::byte* dst, double value) {
  store_le<std::uint64_t>(dst, std::bit_cast<std::uint64_t>(value));
}
[[nodiscard]] inline float load_le_f32(const std::byte* src) {
  return std::bit_cast<float>(load_le<std::uint32_t>(src));
}
[[nodiscard]] inline double load_le_f64(const std::byte* src) {
  return std::bit_cast<double>(load_le<std::uint64_t>(src));
}

/// Append-only byte buffer with typed little-endian writes.
class Writer {
public:
  template <WireInt T>
  void put(T value) {
    const std::size_t at = buf_.size();
    buf_.resize(at + sizeof(T));
    store_le<T>(buf_.data() + at, value);
  }

  void put_f32(float value) { put(std::bit_cast<std::uint32_t>(value)); }
  void put_f64(double value) { put(std::bit_cast<std::uint64_t>(value)); }
  void put_bool(bool value) { put<std::uint8_t>(value ? 1 : 0); }

  /// u32 length prefix + raw bytes.
  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(std::as_bytes(std::span(s.data(), s.size())));
  }

  void put_bytes(std::span<const std::byte> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }

  [[nodiscard]] const std::vector<std::byte>& bytes() const noexcept { return buf_; }
  [[nodiscard]] std::vector<std::byte> take() noexcept { return std::move(buf_); }
  [[nodiscard]] std::size_t size() const noexcept { return buf_.size(); }
  void reserve(std::size_t n) { buf_.reserve(n); }

private:
  std::vector<std::byte> buf_;
};

/// Bounds-checked cursor over a byte span; short reads throw FormatError.
class Reader {
public:
  explicit Reader(std::span<const std::byte> data) : data_(data) {}

  template <WireInt T>
  [[nodiscard]] T get() {
    require(sizeof(T));
    T v = load_le<T>(data_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }

  [[nodiscard]] float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  [[nodiscard]] double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  [[nodiscard]] bool get_bool() { return get<std::uint8_t>() != 0; }

  [[nodiscard]] std::string get_string() {
    auto len = get<std::uint32_t>();
    require(len);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  [[nodiscard]] std::span<const std::byte> get_bytes(std::size_t n) {
    require(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }
  [[nodiscard]] bool exhausted() const noexcept { return pos_ == data_.size(); }

private:
  void require(std::size_t n) const {
    if (n > data_.size() - pos_) {
      raise(Errc::FormatError, "truncated input: need " + std::to_string(n) + " bytes, have " +
                                   std::to_string(data_.size() - pos_));
    }
  }

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a over a byte string.
[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace terc::wire
