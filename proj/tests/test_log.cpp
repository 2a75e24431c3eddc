#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "logres/log.hpp"

using namespace logres;
using namespace logres::testing;

namespace {

LogCertificate certify(const Log& log, const std::vector<KeyPair>& keys, std::initializer_list<std::uint16_t> signers) {
  LogCertificate cert{log, {}};
  const auto payload = log_sig_payload(mk_digest(log));
  for (auto s : signers) cert.sigs.push_back(sign(keys[s], payload));
  return cert;
}

}  // namespace

TEST_CASE("entry sets are canonical") {
  EntrySet s{"b", "a", "b"};
  REQUIRE(s.size() == 2);
  CHECK(s.entries()[0] == entry("a"));
  CHECK(s.entries()[1] == entry("b"));
  CHECK(s == EntrySet{"a", "b"});
  CHECK_THROWS_AS(Entry(Bytes{}), std::invalid_argument);
  CHECK_THROWS_AS(Entry(Bytes(70000, 1)), std::invalid_argument);

  // Byte order is unsigned.
  EntrySet hi{};
  hi.insert(Entry(Bytes{0xff}));
  hi.insert(Entry(Bytes{0x01}));
  CHECK(hi.entries().front().bytes() == Bytes{0x01});
}

TEST_CASE("entry set decoding rejects non-canonical input") {
  Writer w;
  w.u32(2);
  w.bytes16(to_bytes("b"));
  w.bytes16(to_bytes("a"));
  Reader r(w.data());
  CHECK_THROWS_AS(EntrySet::decode(r), DecodeError);

  Writer dup;
  dup.u32(2);
  dup.bytes16(to_bytes("a"));
  dup.bytes16(to_bytes("a"));
  Reader rd(dup.data());
  CHECK_THROWS_AS(EntrySet::decode(rd), DecodeError);

  Writer empty_entry;
  empty_entry.u32(1);
  empty_entry.u16(0);
  Reader re(empty_entry.data());
  CHECK_THROWS_AS(EntrySet::decode(re), DecodeError);
}

TEST_CASE("canonical log encoding is pinned") {
  // Golden bytes and digests computed independently with Python hashlib.
  auto g = genesis_log();
  CHECK(to_hex(encode_log(g)) ==
        "03000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000"
        "00");
  CHECK(to_hex(mk_digest(g)) == "021a90eea4c0362b7e96ff34f6b917ac92421235ed34b5784ff258f2726833d6");

  auto l1 = mk_log(g, EntrySet{"b", "a"}, 60000, 0);
  CHECK(to_hex(encode_log(l1)) ==
        "030000000000000001000000000000ea60021a90eea4c0362b7e96ff34f6b917ac92421235ed34b5784ff258f2726833d6"
        "00000002000161000162");
  CHECK(to_hex(mk_digest(l1)) == "373a737fa7479989b75b0fec66b04bad962a3c22352aeb5bcf266bc3a51e3f49");

  auto shifted = l1;
  shifted.expiration += 1;
  CHECK(to_hex(mk_digest(shifted)) == "50126c294b83b9d3e971d5f2ec69b1d1e8c7805d2210803b23a6a3325c0f2a92");

  const auto encoded = encode_log(l1);
  Reader r(encoded);
  CHECK(decode_log(r) == l1);
}

TEST_CASE("mk_log") {
  auto g = genesis_log();
  auto l1 = mk_log(g, EntrySet{"a"}, 1000, 50);
  CHECK(l1.epoch == 1);
  CHECK(l1.prev_digest == mk_digest(g));
  CHECK(l1.expiration == 1050);

  SUBCASE("empty union keeps entries") {
    auto l2 = mk_log(l1, EntrySet{}, 1000, 60);
    CHECK(l2.entries == l1.entries);
    CHECK(l2.epoch == 2);
  }
  SUBCASE("new entries are ordered") {
    auto l2 = mk_log(l1, EntrySet{"c", "b"}, 1000, 60);
    REQUIRE(l2.entries.size() == 3);
    CHECK(l2.entries.entries()[1] == entry("b"));
    CHECK(l2.entries.entries()[2] == entry("c"));
  }
  SUBCASE("deterministic") {
    CHECK(mk_log(l1, EntrySet{"z"}, 1000, 60) == mk_log(l1, EntrySet{"z"}, 1000, 60));
    CHECK(mk_digest(mk_log(l1, EntrySet{"y", "z"}, 1000, 60)) == mk_digest(mk_log(l1, EntrySet{"z", "y"}, 1000, 60)));
  }
}

TEST_CASE("mk_log union matches a naive set oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<std::string> oracle;
    std::vector<Entry> prev_entries;
    std::vector<Entry> fresh;
    for (int k = 0; k < 6; ++k) {
      std::string s(1, static_cast<char>('a' + rng() % 8));
      oracle.insert(s);
      prev_entries.push_back(entry(s));
    }
    for (int k = 0; k < 6; ++k) {
      std::string s(1, static_cast<char>('a' + rng() % 8));
      oracle.insert(s);
      fresh.push_back(entry(s));
    }
    Log prev = genesis_log();
    prev.entries = EntrySet(prev_entries);
    auto next = mk_log(prev, EntrySet(fresh), 10, 0);
    std::vector<std::string> got;
    for (const auto& e : next.entries) got.emplace_back(e.bytes().begin(), e.bytes().end());
    CHECK(got == std::vector<std::string>(oracle.begin(), oracle.end()));
  }
}

TEST_CASE("validate_certificate") {
  auto keys = make_keys(5);
  auto reg = PublicRegistry::from_keypairs(keys, 2);
  auto log = mk_log(genesis_log(), EntrySet{"a"}, 1000, 100);  // expires at 1100

  CHECK(validate_certificate(certify(log, keys, {0, 1, 2}), reg, 500).valid());
  CHECK(validate_certificate(certify(log, keys, {0, 1, 2, 3, 4}), reg, 500).valid());

  auto dup = certify(log, keys, {0, 1, 1});
  auto v = validate_certificate(dup, reg, 500);
  CHECK(v.status == CertStatus::duplicate_signer);
  CHECK(v.distinct_valid_signers == 2);

  CHECK(validate_certificate(certify(log, keys, {0, 1, 2}), reg, 1100).status == CertStatus::expired);
  CHECK(validate_certificate(certify(log, keys, {0, 1}), reg, 500).status == CertStatus::insufficient_sigs);

  auto bad = certify(log, keys, {0, 1, 2});
  bad.sigs[2].bytes[0] ^= 1;
  CHECK(validate_certificate(bad, reg, 500).status == CertStatus::bad_sig);

  auto other_log = log;
  other_log.entries.insert(entry("b"));
  auto mixed = certify(other_log, keys, {0, 1});
  mixed.sigs.push_back(certify(log, keys, {2}).sigs[0]);
  CHECK_FALSE(validate_certificate(mixed, reg, 500).valid());
}

TEST_CASE("certificate encoding round-trips") {
  auto keys = make_keys(3);
  auto cert = certify(mk_log(genesis_log(), EntrySet{"a", "bb"}, 5, 5), keys, {0, 2});
  const auto encoded = encode_certificate(cert);
  Reader r(encoded);
  CHECK(decode_certificate(r) == cert);
  CHECK(r.done());
}
