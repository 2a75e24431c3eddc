#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "logres/bytes.hpp"
#include "logres/entry.hpp"

namespace logres {

using Digest = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);

/// Signature backends. Ed25519 is used by the networked runtime; the keyed-MAC
/// scheme is a fast deterministic stand-in for the simulator whose "public"
/// key equals the secret and is only ever held by the test harness.
enum class Scheme : std::uint8_t { ed25519, hmac_sha256 };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct KeyPair {
  NodeId node;
  Scheme scheme = Scheme::ed25519;
  Bytes secret;
  Bytes public_key;
};

struct Signature {
  NodeId signer;
  Bytes bytes;

  auto operator<=>(const Signature&) const = default;
};

/// Deterministic: the same (seed, node, scheme) always yields the same pair.
KeyPair keygen(const Seed& seed, NodeId node, Scheme scheme = Scheme::ed25519);
/// Seed from the system CSPRNG.
Seed random_seed();
/// Rebuilds a key pair from a stored secret. For Ed25519 the public key is
/// the tail of the 64-byte secret. Throws std::invalid_argument on bad length.
KeyPair keypair_from_secret(NodeId node, Scheme scheme, Bytes secret);

/// Whether correct-majority (n > 2f) or only n > f is enforced.
enum class FaultBound : std::uint8_t { strict, weak };

/// Immutable map from node id to verification key, plus the fault threshold.
class PublicRegistry {
 public:
  PublicRegistry(Scheme scheme, std::vector<Bytes> keys, std::uint16_t f,
                 FaultBound bound = FaultBound::strict);

  /// Registry for keys[i].node == i.
  static PublicRegistry from_keypairs(const std::vector<KeyPair>& pairs, std::uint16_t f,
                                      FaultBound bound = FaultBound::strict);

  Scheme scheme() const { return scheme_; }
  std::uint16_t n() const { return static_cast<std::uint16_t>(keys_.size()); }
  std::uint16_t f() const { return f_; }
  FaultBound bound() const { return bound_; }
  /// Signatures required for a valid log (theta = f + 1).
  std::size_t quorum() const { return static_cast<std::size_t>(f_) + 1; }
  bool contains(NodeId id) const { return id.value < keys_.size(); }
  const Bytes& key(NodeId id) const { return keys_.at(id.value); }

 private:
  Scheme scheme_;
  std::vector<Bytes> keys_;
  std::uint16_t f_;
  FaultBound bound_;
};

Signature sign(const KeyPair& kp, ByteView payload);
/// Unknown signers and malformed signatures verify as false.
bool verify(const PublicRegistry& reg, const Signature& sig, ByteView payload);

inline constexpr std::uint8_t kVoteTag = 0x01;
inline constexpr std::uint8_t kLogSigTag = 0x02;
inline constexpr std::uint8_t kLogTag = 0x03;

/// How Replicate votes are bound to their thread.
enum class VoteBinding : std::uint8_t {
  primary_bound,
  /// Primary omitted from the signed payload. Deliberately vulnerable to
  /// cross-thread replay; exists only to reproduce that flaw.
  unbound,
};

/// 0x01 || primary (u16) || entry set, optionally followed by the epoch (u64).
Bytes vote_payload(const EntrySet& x, NodeId primary,
                   std::optional<std::uint64_t> epoch = std::nullopt);
/// 0x01 || entry set || epoch (u64). Flawed variant, see VoteBinding::unbound.
Bytes unbound_vote_payload(const EntrySet& x, std::uint64_t epoch);
Bytes vote_payload(VoteBinding binding, const EntrySet& x, NodeId primary, std::uint64_t epoch);

/// 0x02 || digest. Throws EncodeError unless the digest is exactly 32 bytes.
Bytes log_sig_payload(ByteView digest);
inline Bytes log_sig_payload(const Digest& digest) { return log_sig_payload(ByteView(digest)); }

}  // namespace logres
