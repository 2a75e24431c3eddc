#include "logres/log.hpp"

#include <set>

namespace logres {

void encode_log(Writer& w, const Log& log) {
  w.u8(kLogTag);
  w.u64(log.epoch);
  w.u64(log.expiration);
  w.raw(log.prev_digest);
  log.entries.encode(w);
}

Bytes encode_log(const Log& log) {
  Writer w;
  encode_log(w, log);
  return std::move(w).take();
}

Log decode_log(Reader& r) {
  if (r.u8() != kLogTag) throw DecodeError("not a log encoding");
  Log log;
  log.epoch = r.u64();
  log.expiration = r.u64();
  auto prev = r.raw(log.prev_digest.size());
  std::copy(prev.begin(), prev.end(), log.prev_digest.begin());
  log.entries = EntrySet::decode(r);
  return log;
}

Log genesis_log(UnixMillis expiration) {
  Log log;
  log.expiration = expiration;
  return log;
}

Log mk_log(const Log& prev, const EntrySet& new_entries, Millis period, UnixMillis now) {
  Log next;
  next.epoch = prev.epoch + 1;
  next.prev_digest = mk_digest(prev);
  next.entries = prev.entries.united(new_entries);
  next.expiration = now + period;
  return next;
}

Digest mk_digest(const Log& log) { return sha256(encode_log(log)); }

void encode_certificate(Writer& w, const LogCertificate& cert) {
  encode_log(w, cert.log);
  if (cert.sigs.size() > 0xffff) throw EncodeError("too many certificate signatures");
  w.u16(static_cast<std::uint16_t>(cert.sigs.size()));
  for (const auto& s : cert.sigs) {
    w.u16(s.signer.value);
    w.bytes16(s.bytes);
  }
}

Bytes encode_certificate(const LogCertificate& cert) {
  Writer w;
  encode_certificate(w, cert);
  return std::move(w).take();
}

LogCertificate decode_certificate(Reader& r) {
  LogCertificate cert;
  cert.log = decode_log(r);
  auto count = r.u16();
  cert.sigs.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    Signature s;
    s.signer = NodeId{r.u16()};
    s.bytes = r.bytes16();
    cert.sigs.push_back(std::move(s));
  }
  return cert;
}

std::string_view to_string(CertStatus s) {
  switch (s) {
    case CertStatus::ok: return "ok";
    case CertStatus::expired: return "expired";
    case CertStatus::insufficient_sigs: return "insufficient_sigs";
    case CertStatus::bad_sig: return "bad_sig";
    case CertStatus::duplicate_signer: return "duplicate_signer";
  }
  return "unknown";
}

CertVerdict validate_certificate(const LogCertificate& cert, const PublicRegistry& reg, UnixMillis now) {
  CertVerdict verdict;
  if (now >= cert.log.expiration) {
    verdict.status = CertStatus::expired;
    return verdict;
  }
  const auto payload = log_sig_payload(mk_digest(cert.log));
  std::set<NodeId> seen;
  std::set<NodeId> valid;
  bool duplicate = false;
  bool bad = false;
  for (const auto& s : cert.sigs) {
    if (!seen.insert(s.signer).second) duplicate = true;
    if (verify(reg, s, payload)) {
      valid.insert(s.signer);
    } else {
      bad = true;
    }
  }
  verdict.distinct_valid_signers = valid.size();
  if (valid.size() >= reg.quorum()) return verdict;
  verdict.status = duplicate ? CertStatus::duplicate_signer
                 : bad       ? CertStatus::bad_sig
                             : CertStatus::insufficient_sigs;
  return verdict;
}

}  // namespace logres
