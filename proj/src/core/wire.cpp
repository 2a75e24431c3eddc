#include "logres/wire.hpp"

namespace logres::wire {

namespace {

bool known_type(std::uint8_t t) {
  switch (static_cast<FrameType>(t)) {
    case FrameType::replication_bundle:
    case FrameType::log_signature:
    case FrameType::client_submit:
    case FrameType::certificate_request:
    case FrameType::certificate_response:
    case FrameType::submit_ack:
      return true;
  }
  return false;
}

}  // namespace

Bytes encode_frame(FrameType type, ByteView body) {
  if (body.size() + 1 > kMaxFrameLength) throw EncodeError("frame too large");
  Writer w;
  w.u32(static_cast<std::uint32_t>(body.size() + 1));
  w.u8(static_cast<std::uint8_t>(type));
  w.raw(body);
  return std::move(w).take();
}

std::uint32_t frame_length(ByteView header) {
  Reader r(header);
  return r.u32();
}

Frame decode_frame(ByteView bytes) {
  Reader r(bytes);
  auto len = r.u32();
  if (len == 0 || len > kMaxFrameLength || len != r.remaining()) throw DecodeError("bad frame length");
  auto type = r.u8();
  if (!known_type(type)) throw DecodeError("unknown frame type");
  auto body = r.raw(r.remaining());
  return Frame{static_cast<FrameType>(type), Bytes(body.begin(), body.end())};
}

Bytes encode_bundle(const ReplicationBundle& b) {
  Writer w;
  w.u16(b.sender.value);
  w.u64(b.epoch);
  w.u32(b.round);
  if (b.msgs.size() > 0xffff) throw EncodeError("too many thread messages");
  w.u16(static_cast<std::uint16_t>(b.msgs.size()));
  for (const auto& m : b.msgs) encode_replicate_msg(w, m);
  return std::move(w).take();
}

ReplicationBundle decode_bundle(ByteView body) {
  Reader r(body);
  ReplicationBundle b;
  b.sender = NodeId{r.u16()};
  b.epoch = r.u64();
  b.round = r.u32();
  auto count = r.u16();
  b.msgs.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) b.msgs.push_back(decode_replicate_msg(r));
  r.expect_done();
  return b;
}

Bytes encode_log_sig(const LogSigMsg& m) {
  Writer w;
  w.u16(m.sender.value);
  w.u64(m.epoch);
  w.raw(m.digest);
  w.bytes16(m.sig);
  return std::move(w).take();
}

LogSigMsg decode_log_sig(ByteView body) {
  Reader r(body);
  LogSigMsg m;
  m.sender = NodeId{r.u16()};
  m.epoch = r.u64();
  auto d = r.raw(m.digest.size());
  std::copy(d.begin(), d.end(), m.digest.begin());
  m.sig = r.bytes16();
  r.expect_done();
  return m;
}

Bytes encode_message(const NodeMessage& m) {
  if (const auto* b = std::get_if<ReplicationBundle>(&m)) {
    return encode_frame(FrameType::replication_bundle, encode_bundle(*b));
  }
  return encode_frame(FrameType::log_signature, encode_log_sig(std::get<LogSigMsg>(m)));
}

NodeMessage decode_message(const Frame& frame) {
  switch (frame.type) {
    case FrameType::replication_bundle: return decode_bundle(frame.body);
    case FrameType::log_signature: return decode_log_sig(frame.body);
    default: throw DecodeError("not a peer message frame");
  }
}

Bytes encode_certificate_response(const std::optional<LogCertificate>& cert) {
  Writer w;
  w.u8(cert ? 1 : 0);
  if (cert) encode_certificate(w, *cert);
  return std::move(w).take();
}

std::optional<LogCertificate> decode_certificate_response(ByteView body) {
  Reader r(body);
  auto present = r.u8();
  if (present > 1) throw DecodeError("bad presence flag");
  std::optional<LogCertificate> out;
  if (present) out = decode_certificate(r);
  r.expect_done();
  return out;
}

}  // namespace logres::wire
