#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "logres/crypto.hpp"
#include "logres/entry.hpp"

namespace logres {

using UnixMillis = std::uint64_t;
using Millis = std::uint64_t;

/// One version of the replicated log. Entries are cumulative across epochs.
struct Log {
  std::uint64_t epoch = 0;
  Digest prev_digest{};
  EntrySet entries;
  UnixMillis expiration = 0;

  auto operator<=>(const Log&) const = default;
};

/// Canonical encoding: 0x03 || epoch (u64) || expiration (u64) || prev_digest
/// || entry count (u32) || u16-length-prefixed entries.
void encode_log(Writer& w, const Log& log);
Bytes encode_log(const Log& log);
Log decode_log(Reader& r);

Log genesis_log(UnixMillis expiration = 0);

/// Builds the successor of `prev` containing prev.entries and new_entries.
/// Deterministic in all arguments; every correct node must pass the same `now`.
Log mk_log(const Log& prev, const EntrySet& new_entries, Millis period, UnixMillis now);

/// SHA-256 over the canonical log encoding.
Digest mk_digest(const Log& log);

/// A log together with digest signatures from its witnesses.
struct LogCertificate {
  Log log;
  std::vector<Signature> sigs;

  auto operator<=>(const LogCertificate&) const = default;
};

void encode_certificate(Writer& w, const LogCertificate& cert);
Bytes encode_certificate(const LogCertificate& cert);
LogCertificate decode_certificate(Reader& r);

enum class CertStatus : std::uint8_t { ok, expired, insufficient_sigs, bad_sig, duplicate_signer };

std::string_view to_string(CertStatus s);

struct CertVerdict {
  CertStatus status = CertStatus::ok;
  std::size_t distinct_valid_signers = 0;

  bool valid() const { return status == CertStatus::ok; }
  explicit operator bool() const { return valid(); }
};

/// Valid iff now < expiration and at least f+1 distinct registered signers
/// produced a verifying signature over log_sig_payload(mk_digest(log)).
/// When the count falls short the reason prefers duplicate_signer, then
/// bad_sig, then insufficient_sigs.
CertVerdict validate_certificate(const LogCertificate& cert, const PublicRegistry& reg, UnixMillis now);

}  // namespace logres
