#pragma once

#include <memory>
#include <vector>

#include "logres/crypto.hpp"
#include "logres/node.hpp"

namespace logres::testing {

inline Seed seed_of(std::uint8_t fill) {
  Seed s{};
  s.fill(fill);
  return s;
}

inline std::vector<KeyPair> make_keys(std::uint16_t n, Scheme scheme = Scheme::hmac_sha256,
                                      std::uint8_t fill = 7) {
  std::vector<KeyPair> keys;
  for (std::uint16_t i = 0; i < n; ++i) keys.push_back(keygen(seed_of(fill), NodeId{i}, scheme));
  return keys;
}

inline std::shared_ptr<const PublicRegistry> make_registry(const std::vector<KeyPair>& keys, std::uint16_t f,
                                                           FaultBound bound = FaultBound::strict) {
  return std::make_shared<const PublicRegistry>(PublicRegistry::from_keypairs(keys, f, bound));
}

inline Entry entry(std::string_view s) { return Entry::from_string(s); }

inline ReplicateContext context(std::uint16_t n, std::uint16_t f, std::uint64_t epoch = 1) {
  return ReplicateContext{n, epoch, Round(f) + 1, VoteBinding::primary_bound, false};
}

}  // namespace logres::testing
