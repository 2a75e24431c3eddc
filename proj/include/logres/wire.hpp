#pragma once

#include <cstdint>
#include <optional>

#include "logres/bytes.hpp"
#include "logres/log.hpp"
#include "logres/node.hpp"

namespace logres::wire {

enum class FrameType : std::uint8_t {
  replication_bundle = 0x01,
  log_signature = 0x02,
  client_submit = 0x10,
  certificate_request = 0x11,
  certificate_response = 0x12,
  submit_ack = 0x13,
};

/// Upper bound on a frame's length field; larger frames are rejected unread.
inline constexpr std::uint32_t kMaxFrameLength = 256u << 20;

struct Frame {
  FrameType type;
  Bytes body;
};

/// u32 length (type + body) || type || body.
Bytes encode_frame(FrameType type, ByteView body);
/// Decodes a complete frame. Throws DecodeError on unknown type or length mismatch.
Frame decode_frame(ByteView bytes);
/// Length announced by a 4-byte frame header.
std::uint32_t frame_length(ByteView header);

/// sender (u16) || epoch (u64) || round (u32) || msg count (u16) || ReplicateMsg...
Bytes encode_bundle(const ReplicationBundle& b);
ReplicationBundle decode_bundle(ByteView body);

/// sender (u16) || epoch (u64) || digest (32) || sig (u16 len + bytes)
Bytes encode_log_sig(const LogSigMsg& m);
LogSigMsg decode_log_sig(ByteView body);

/// Full frame bytes for a peer message.
Bytes encode_message(const NodeMessage& m);
/// Parses a peer frame; the whole frame is rejected on any malformation.
NodeMessage decode_message(const Frame& frame);

enum class SubmitStatus : std::uint8_t { accepted = 0, duplicate = 1, oversized = 2, rejected = 3 };

/// present (u8) || certificate encoding when present.
Bytes encode_certificate_response(const std::optional<LogCertificate>& cert);
std::optional<LogCertificate> decode_certificate_response(ByteView body);

}  // namespace logres::wire
