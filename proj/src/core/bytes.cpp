#include "logres/bytes.hpp"

#include <limits>

namespace logres {

std::string to_string(NodeId id) { return std::to_string(id.value); }

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {
int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw DecodeError("hex string has odd length");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw DecodeError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

void Writer::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void Writer::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void Writer::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void Writer::bytes16(ByteView bytes) {
  if (bytes.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw EncodeError("field exceeds 65535 bytes");
  }
  u16(static_cast<std::uint16_t>(bytes.size()));
  raw(bytes);
}

void Reader::need(std::size_t len) const {
  if (remaining() < len) throw DecodeError("truncated input");
}

std::uint8_t Reader::u8() {
  need(1);
  return in_[pos_++];
}

std::uint16_t Reader::u16() {
  need(2);
  auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

ByteView Reader::raw(std::size_t len) {
  need(len);
  auto view = in_.subspan(pos_, len);
  pos_ += len;
  return view;
}

Bytes Reader::bytes16() {
  auto len = u16();
  auto view = raw(len);
  return Bytes(view.begin(), view.end());
}

void Reader::expect_done() const {
  if (!done()) throw DecodeError("trailing bytes after structure");
}

}  // namespace logres
