// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace laksa {

using Bytes32 = std::array<std::uint8_t, 32>;

struct Bytes32Hash {
  std::size_t operator()(const Bytes32& b) const noexcept {
    std::size_t h;
    std::memcpy(&h, b.data(), sizeof(h));
    return h;
  }
};

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

inline std::string short_hex(const Bytes32& b) {
  return to_hex(std::span<const std::uint8_t>(b.data(), 8));
}

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Canonical little-endian, length-prefixed binary encoding primitives.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u64le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void i64le(std::int64_t v) { u64le(static_cast<std::uint64_t>(v)); }

  void raw(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }

  void raw(const Bytes32& b) { raw(std::span<const std::uint8_t>(b.data(), b.size())); }

  // u32 length prefix followed by the payload
  void blob(std::span<const std::uint8_t> bytes) {
    u32le(static_cast<std::uint32_t>(bytes.size()));
    raw(bytes);
  }

  std::vector<std::uint8_t> take() { return std::move(buf_); }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() { return take(1)[0]; }

  std::uint32_t u32le() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint64_t u64le() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::int64_t i64le() { return static_cast<std::int64_t>(u64le()); }

  Bytes32 bytes32() {
    auto b = take(32);
    Bytes32 out;
    std::memcpy(out.data(), b.data(), 32);
    return out;
  }

  std::vector<std::uint8_t> blob() {
    std::uint32_t len = u32le();
    auto b = take(len);
    return {b.begin(), b.end()};
  }

  bool done() const { return pos_ == data_.size(); }

  void expect_done() const {
    if (!done()) throw CodecError("trailing bytes after decoded message");
  }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos_ + n > data_.size()) throw CodecError("message truncated");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace laksa
