#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "logres/replicate.hpp"

using namespace logres;
using namespace logres::testing;

namespace {

struct ThreadHarness {
  std::uint16_t n;
  std::uint16_t f;
  NodeId primary;
  std::vector<KeyPair> keys;
  PublicRegistry reg;
  ReplicateContext ctx;
  std::vector<ThreadState> states;

  ThreadHarness(std::uint16_t n_, std::uint16_t f_, NodeId p, const EntrySet& input)
      : n(n_), f(f_), primary(p), keys(make_keys(n_)), reg(PublicRegistry::from_keypairs(keys, f_)),
        ctx(context(n_, f_)) {
    for (std::uint16_t i = 0; i < n; ++i) states.push_back(thread_init(NodeId{i}, primary, input));
  }

  /// Delivers everything every node sends in round r.
  void honest_round(Round r) {
    std::vector<std::vector<ReplicateMsg>> inbox(n);
    for (const auto& s : states) {
      for (auto& [to, m] : thread_send(s, r, keys[s.self.value], ctx)) inbox[to.value].push_back(std::move(m));
    }
    for (std::uint16_t i = 0; i < n; ++i) states[i] = thread_next(states[i], r, inbox[i], reg, ctx);
  }

  WitnessedValue vote(const EntrySet& x, std::initializer_list<std::uint16_t> signers) const {
    WitnessedValue v{x, primary, {}};
    for (auto s : signers) v.witnesses[NodeId{s}] = sign(keys[s], ctx.payload(x, primary)).bytes;
    return v;
  }
};

}  // namespace

TEST_CASE("correct primary: every node decides the input") {
  for (std::uint16_t f = 0; f <= 2; ++f) {
    const std::uint16_t n = 2 * f + 1;
    EntrySet x{"a", "b"};
    ThreadHarness h(n, f, NodeId{0}, x);
    for (Round r = 1; r <= h.ctx.rounds; ++r) h.honest_round(r);
    for (const auto& s : h.states) CHECK(thread_decide(s, h.ctx) == x);
  }
}

TEST_CASE("empty input is decided as empty") {
  ThreadHarness h(3, 1, NodeId{1}, EntrySet{});
  for (Round r = 1; r <= h.ctx.rounds; ++r) h.honest_round(r);
  for (const auto& s : h.states) CHECK(thread_decide(s, h.ctx).empty());
}

TEST_CASE("primary sends only in round one") {
  ThreadHarness h(3, 1, NodeId{0}, EntrySet{"a"});
  auto out = thread_send(h.states[0], 1, h.keys[0], h.ctx);
  CHECK(out.size() == 2);
  CHECK_FALSE(out.contains(NodeId{0}));
  CHECK(thread_send(h.states[0], 2, h.keys[0], h.ctx).empty());
}

TEST_CASE("responders forward newly accepted values to everyone but themselves and the primary") {
  ThreadHarness h(5, 2, NodeId{0}, EntrySet{"a"});
  h.honest_round(1);
  auto out = thread_send(h.states[1], 2, h.keys[1], h.ctx);
  CHECK(out.size() == 3);
  CHECK_FALSE(out.contains(NodeId{0}));
  CHECK_FALSE(out.contains(NodeId{1}));
  const auto& v = out.at(NodeId{2}).values.at(0);
  CHECK(v.witness_ids() == std::set<NodeId>{NodeId{0}, NodeId{1}});
}

TEST_CASE("acceptance filter") {
  const EntrySet x{"x"};
  ThreadHarness h(5, 2, NodeId{0}, x);
  auto& responder = h.states[1];

  SUBCASE("round one needs only the primary") {
    ReplicateMsg m{NodeId{0}, 1, 1, NodeId{0}, {h.vote(x, {0})}};
    auto s = thread_next(responder, 1, std::span(&m, 1), h.reg, h.ctx);
    CHECK(s.decision == x);
    CHECK(s.pending.size() == 1);
  }
  SUBCASE("missing primary signature is rejected") {
    ReplicateMsg m{NodeId{2}, 1, 1, NodeId{0}, {h.vote(x, {2, 3})}};
    DropCounters d;
    auto s = thread_next(responder, 1, std::span(&m, 1), h.reg, h.ctx, &d);
    CHECK(s.witnessed.empty());
    CHECK(d.under_witnessed == 1);
  }
  SUBCASE("round r requires r witnesses") {
    auto s = thread_next(responder, 1, {}, h.reg, h.ctx);
    ReplicateMsg few{NodeId{2}, 1, 2, NodeId{0}, {h.vote(x, {0})}};
    auto s2 = thread_next(s, 2, std::span(&few, 1), h.reg, h.ctx);
    CHECK(s2.witnessed.empty());
    ReplicateMsg enough{NodeId{2}, 1, 2, NodeId{0}, {h.vote(x, {0, 2})}};
    auto s3 = thread_next(s, 2, std::span(&enough, 1), h.reg, h.ctx);
    CHECK(s3.decision == x);
  }
  SUBCASE("witness sets for one value merge across senders") {
    auto s = thread_next(responder, 1, {}, h.reg, h.ctx);
    s = thread_next(s, 2, {}, h.reg, h.ctx);
    std::vector<ReplicateMsg> inbox{{NodeId{2}, 1, 3, NodeId{0}, {h.vote(x, {0, 2})}},
                                    {NodeId{3}, 1, 3, NodeId{0}, {h.vote(x, {0, 3})}}};
    auto s3 = thread_next(s, 3, inbox, h.reg, h.ctx);
    CHECK(s3.decision == x);
    REQUIRE(s3.round_votes.size() == 1);
    CHECK(s3.round_votes[0].witnesses.size() == 3);
  }
  SUBCASE("forged witness signatures do not count") {
    auto s = thread_next(responder, 1, {}, h.reg, h.ctx);
    auto v = h.vote(x, {0, 2});
    v.witnesses[NodeId{2}][0] ^= 1;
    ReplicateMsg m{NodeId{2}, 1, 2, NodeId{0}, {v}};
    DropCounters d;
    auto s2 = thread_next(s, 2, std::span(&m, 1), h.reg, h.ctx, &d);
    CHECK(s2.witnessed.empty());
    CHECK(d.bad_signature == 1);
  }
  SUBCASE("duplicate sender is ignored after the first message") {
    std::vector<ReplicateMsg> inbox{{NodeId{0}, 1, 1, NodeId{0}, {}}, {NodeId{0}, 1, 1, NodeId{0}, {h.vote(x, {0})}}};
    DropCounters d;
    auto s = thread_next(responder, 1, inbox, h.reg, h.ctx, &d);
    CHECK(s.witnessed.empty());
    CHECK(d.duplicate_sender == 1);
  }
  SUBCASE("messages from another epoch are dropped") {
    ReplicateMsg m{NodeId{0}, 2, 1, NodeId{0}, {h.vote(x, {0})}};
    DropCounters d;
    auto s = thread_next(responder, 1, std::span(&m, 1), h.reg, h.ctx, &d);
    CHECK(s.witnessed.empty());
    CHECK(d.wrong_context == 1);
  }
}

TEST_CASE("two values from an equivocating primary yield the empty decision") {
  ThreadHarness h(5, 2, NodeId{0}, EntrySet{});
  const EntrySet y{"y"}, z{"z"};
  ReplicateMsg m{NodeId{0}, 1, 1, NodeId{0}, {h.vote(y, {0}), h.vote(z, {0})}};
  auto s = thread_next(h.states[1], 1, std::span(&m, 1), h.reg, h.ctx);
  CHECK(s.decision.empty());
  CHECK(s.witnessed.size() == 2);

  SUBCASE("a later value flips a single decision to empty") {
    ReplicateMsg first{NodeId{0}, 1, 1, NodeId{0}, {h.vote(y, {0})}};
    auto t = thread_next(h.states[2], 1, std::span(&first, 1), h.reg, h.ctx);
    CHECK(t.decision == y);
    ReplicateMsg later{NodeId{3}, 1, 2, NodeId{0}, {h.vote(z, {0, 3})}};
    t = thread_next(t, 2, std::span(&later, 1), h.reg, h.ctx);
    CHECK(t.decision.empty());
    // Re-receiving a known value changes nothing.
    ReplicateMsg again{NodeId{4}, 1, 3, NodeId{0}, {h.vote(y, {0, 3, 4})}};
    t = thread_next(t, 3, std::span(&again, 1), h.reg, h.ctx);
    CHECK(t.decision.empty());
    CHECK(t.pending.empty());
  }
}

TEST_CASE("thread_decide before the final round throws") {
  ThreadHarness h(3, 1, NodeId{0}, EntrySet{"a"});
  h.honest_round(1);
  CHECK_THROWS_AS(thread_decide(h.states[1], h.ctx), std::logic_error);
  CHECK_THROWS_AS(thread_decide(h.states[0], h.ctx), std::logic_error);
  CHECK_THROWS_AS(thread_next(h.states[1], 3, {}, h.reg, h.ctx), std::logic_error);
  h.honest_round(2);
  CHECK(thread_decide(h.states[1], h.ctx) == EntrySet{"a"});
}

TEST_CASE("replicate message encoding round-trips") {
  ThreadHarness h(3, 1, NodeId{1}, EntrySet{});
  ReplicateMsg m{NodeId{2}, 9, 2, NodeId{1}, {h.vote(EntrySet{"a"}, {1, 2}), h.vote(EntrySet{}, {1})}};
  Writer w;
  encode_replicate_msg(w, m);
  Reader r(w.data());
  CHECK(decode_replicate_msg(r) == m);
  CHECK(r.done());
}

TEST_CASE("random honest runs agree") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint16_t f = static_cast<std::uint16_t>(rng() % 3);
    const std::uint16_t n = static_cast<std::uint16_t>(2 * f + 1 + rng() % 2);
    EntrySet x;
    for (int k = 0; k < 3; ++k) {
      if (rng() % 2) x.insert(entry(std::string(1, static_cast<char>('a' + k))));
    }
    ThreadHarness h(n, f, NodeId{static_cast<std::uint16_t>(rng() % n)}, x);
    for (Round r = 1; r <= h.ctx.rounds; ++r) h.honest_round(r);
    for (const auto& s : h.states) CHECK(thread_decide(s, h.ctx) == x);
  }
}
