#include "logres/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace logres {

namespace {

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    return true;
  }();
  (void)ready;
}

Seed derive_seed(const Seed& seed, NodeId node) {
  static constexpr std::string_view kLabel = "logres-keygen-v1";
  Writer w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kLabel.data()), kLabel.size()));
  w.raw(seed);
  w.u16(node.value);
  return sha256(w.data());
}

}  // namespace

Digest sha256(ByteView data) {
  ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::ed25519: return "ed25519";
    case Scheme::hmac_sha256: return "hmac-sha256";
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "ed25519") return Scheme::ed25519;
  if (s == "hmac-sha256") return Scheme::hmac_sha256;
  throw std::invalid_argument("unknown signature scheme: " + std::string(s));
}

KeyPair keygen(const Seed& seed, NodeId node, Scheme scheme) {
  ensure_sodium();
  auto derived = derive_seed(seed, node);
  KeyPair kp{node, scheme, {}, {}};
  switch (scheme) {
    case Scheme::ed25519: {
      kp.secret.resize(crypto_sign_SECRETKEYBYTES);
      kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
      crypto_sign_seed_keypair(kp.public_key.data(), kp.secret.data(), derived.data());
      break;
    }
    case Scheme::hmac_sha256:
      kp.secret.assign(derived.begin(), derived.end());
      kp.public_key = kp.secret;
      break;
  }
  return kp;
}

Seed random_seed() {
  ensure_sodium();
  Seed s{};
  randombytes_buf(s.data(), s.size());
  return s;
}

KeyPair keypair_from_secret(NodeId node, Scheme scheme, Bytes secret) {
  KeyPair kp{node, scheme, std::move(secret), {}};
  switch (scheme) {
    case Scheme::ed25519:
      if (kp.secret.size() != crypto_sign_SECRETKEYBYTES) throw std::invalid_argument("ed25519 secret must be 64 bytes");
      kp.public_key.assign(kp.secret.begin() + crypto_sign_SEEDBYTES, kp.secret.end());
      break;
    case Scheme::hmac_sha256:
      if (kp.secret.size() != 32) throw std::invalid_argument("hmac secret must be 32 bytes");
      kp.public_key = kp.secret;
      break;
  }
  return kp;
}

PublicRegistry::PublicRegistry(Scheme scheme, std::vector<Bytes> keys, std::uint16_t f,
                               FaultBound bound)
    : scheme_(scheme), keys_(std::move(keys)), f_(f), bound_(bound) {
  const std::size_t n = keys_.size();
  if (n == 0 || n > 0xffff) throw std::invalid_argument("registry size out of range");
  if (bound_ == FaultBound::strict && !(n > 2 * static_cast<std::size_t>(f_))) {
    throw std::invalid_argument("registry requires n > 2f");
  }
  if (bound_ == FaultBound::weak && !(n > f_)) {
    throw std::invalid_argument("registry requires n > f");
  }
}

PublicRegistry PublicRegistry::from_keypairs(const std::vector<KeyPair>& pairs, std::uint16_t f,
                                             FaultBound bound) {
  if (pairs.empty()) throw std::invalid_argument("no key pairs");
  std::vector<Bytes> keys;
  keys.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].node.value != i) throw std::invalid_argument("key pairs must be ordered by node id");
    if (pairs[i].scheme != pairs.front().scheme) throw std::invalid_argument("mixed schemes");
    keys.push_back(pairs[i].public_key);
  }
  return PublicRegistry(pairs.front().scheme, std::move(keys), f, bound);
}

Signature sign(const KeyPair& kp, ByteView payload) {
  ensure_sodium();
  Signature sig{kp.node, {}};
  switch (kp.scheme) {
    case Scheme::ed25519:
      if (kp.secret.size() != crypto_sign_SECRETKEYBYTES) throw std::invalid_argument("bad ed25519 secret");
      sig.bytes.resize(crypto_sign_BYTES);
      crypto_sign_detached(sig.bytes.data(), nullptr, payload.data(), payload.size(), kp.secret.data());
      break;
    case Scheme::hmac_sha256:
      if (kp.secret.size() != crypto_auth_hmacsha256_KEYBYTES) throw std::invalid_argument("bad mac key");
      sig.bytes.resize(crypto_auth_hmacsha256_BYTES);
      crypto_auth_hmacsha256(sig.bytes.data(), payload.data(), payload.size(), kp.secret.data());
      break;
  }
  return sig;
}

bool verify(const PublicRegistry& reg, const Signature& sig, ByteView payload) {
  ensure_sodium();
  if (!reg.contains(sig.signer)) return false;
  const auto& key = reg.key(sig.signer);
  switch (reg.scheme()) {
    case Scheme::ed25519:
      if (sig.bytes.size() != crypto_sign_BYTES || key.size() != crypto_sign_PUBLICKEYBYTES) return false;
      return crypto_sign_verify_detached(sig.bytes.data(), payload.data(), payload.size(), key.data()) == 0;
    case Scheme::hmac_sha256:
      if (sig.bytes.size() != crypto_auth_hmacsha256_BYTES || key.size() != crypto_auth_hmacsha256_KEYBYTES) {
        return false;
      }
      return crypto_auth_hmacsha256_verify(sig.bytes.data(), payload.data(), payload.size(), key.data()) == 0;
  }
  return false;
}

Bytes vote_payload(const EntrySet& x, NodeId primary, std::optional<std::uint64_t> epoch) {
  Writer w;
  w.u8(kVoteTag);
  w.u16(primary.value);
  x.encode(w);
  if (epoch) w.u64(*epoch);
  return std::move(w).take();
}

Bytes unbound_vote_payload(const EntrySet& x, std::uint64_t epoch) {
  Writer w;
  w.u8(kVoteTag);
  x.encode(w);
  w.u64(epoch);
  return std::move(w).take();
}

Bytes vote_payload(VoteBinding binding, const EntrySet& x, NodeId primary, std::uint64_t epoch) {
  return binding == VoteBinding::primary_bound ? vote_payload(x, primary, epoch)
                                               : unbound_vote_payload(x, epoch);
}

Bytes log_sig_payload(ByteView digest) {
  if (digest.size() != 32) throw EncodeError("log digest must be 32 bytes");
  Bytes out;
  out.reserve(33);
  out.push_back(kLogSigTag);
  out.insert(out.end(), digest.begin(), digest.end());
  return out;
}

}  // namespace logres
