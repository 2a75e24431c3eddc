#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logres {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Thrown when a byte string does not parse as the expected wire structure.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a value cannot be encoded (e.g. a field exceeds its wire width).
class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Process identifier, dense in [0, n).
struct NodeId {
  std::uint16_t value{};

  constexpr auto operator<=>(const NodeId&) const = default;
};

std::string to_string(NodeId id);

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// Append-only big-endian encoder.
class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  /// u16 length prefix followed by the bytes.
  void bytes16(ByteView bytes);

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// Bounds-checked big-endian decoder over a borrowed buffer.
class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView raw(std::size_t len);
  Bytes bytes16();

  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }
  void expect_done() const;

 private:
  void need(std::size_t len) const;

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace logres
