#include <doctest.h>

#include "logres/sim/attacks.hpp"
#include "logres/sim/campaign.hpp"
#include "logres/sim/properties.hpp"

using namespace logres;
using namespace logres::sim;

namespace {

FaultConfig config(std::uint16_t n, std::uint16_t f, NodeSet faulty = {}) {
  FaultConfig cfg;
  cfg.n = n;
  cfg.f = f;
  cfg.faulty = std::move(faulty);
  return cfg;
}

std::vector<EntrySet> inputs_for(std::uint16_t n) {
  std::vector<EntrySet> in;
  for (std::uint16_t i = 0; i < n; ++i) in.push_back(EntrySet{"v" + std::to_string(i)});
  return in;
}

Trace run(const FaultConfig& cfg, Adversary& adv, std::vector<EntrySet> inputs, std::uint64_t seed = 1) {
  return run_lockstep(cfg, adv, inputs, seed);
}

bool any_failure(const std::vector<Verdict>& vs) { return !all_pass(vs); }

Scenario scenario(std::string_view attack, std::uint16_t n, std::uint16_t f, std::uint64_t seed,
                  ProtocolParams params = {}, NodeSet faulty = {}) {
  ScenarioOptions opts;
  opts.params = params;
  if (!faulty.empty()) opts.faulty = faulty;
  return make_scenario(attack, n, f, seed, opts);
}

}  // namespace

TEST_CASE("fault config defaults and validation") {
  auto cfg = config(5, 2, {NodeId{3}, NodeId{4}});
  CHECK(cfg.replication_rounds() == 3);
  CHECK(cfg.steps() == 4);
  CHECK(cfg.signing_step(4));
  CHECK(cfg.ho(NodeId{0}, 1).size() == 5);
  CHECK(cfg.sho(NodeId{0}, 1) == NodeSet{NodeId{0}, NodeId{1}, NodeId{2}});
  CHECK(cfg.survivors(4) == NodeSet{NodeId{0}, NodeId{1}, NodeId{2}});
  CHECK_NOTHROW(cfg.validate());

  auto too_many = config(5, 2, {NodeId{0}, NodeId{1}, NodeId{2}});
  CHECK_THROWS_AS(too_many.validate(), std::invalid_argument);
  auto small = config(4, 2);
  CHECK_THROWS_AS(small.validate(), std::invalid_argument);
  small.mode = BoundMode::weak;
  CHECK_NOTHROW(small.validate());

  auto bad_sho = config(3, 1);
  bad_sho.sho_override[{1, NodeId{0}}] = {NodeId{0}, NodeId{1}};
  bad_sho.ho_override[{1, NodeId{0}}] = {NodeId{0}};
  CHECK_THROWS_AS(bad_sho.validate(), std::invalid_argument);
}

TEST_CASE("normal case without faults") {
  const auto cfg = config(5, 2);
  SilentAdversary adv;
  const auto inputs = inputs_for(5);
  const auto t = run(cfg, adv, inputs);
  REQUIRE(t.valid);
  REQUIRE(t.states.size() == 5);

  for (std::uint16_t i = 0; i < 5; ++i) {
    for (std::uint16_t p = 0; p < 5; ++p) {
      if (p == i) continue;
      CHECK(t.states[1][i].threads[p].decision == inputs[p]);
      CHECK(t.states[2][i].threads[p].decision == inputs[p]);
    }
  }
  // Round 3 has nothing new to forward.
  for (const auto& per_sender : t.outbox[2]) CHECK(per_sender.empty());
  CHECK_FALSE(t.outbox[1][0].empty());

  REQUIRE(t.certificates[0].has_value());
  const auto reference = encode_certificate(*t.certificates[0]);
  for (const auto& c : t.certificates) {
    REQUIRE(c.has_value());
    CHECK(encode_certificate(*c) == reference);
    CHECK(c->sigs.size() == 5);
  }
  EntrySet all;
  for (const auto& x : inputs) {
    for (const auto& e : x) all.insert(e);
  }
  CHECK(t.final_state(NodeId{0}).log.entries == all);
  CHECK(all_pass(check_all(t)));
}

TEST_CASE("silent faulty nodes") {
  const auto cfg = config(5, 2, {NodeId{1}, NodeId{3}});
  SilentAdversary adv;
  const auto inputs = inputs_for(5);
  const auto t = run(cfg, adv, inputs);
  REQUIRE(t.valid);
  CHECK(all_pass(check_all(t)));
  for (auto i : cfg.correct()) {
    const auto& s = t.final_state(i);
    CHECK(s.decided[1].empty());
    CHECK(s.decided[3].empty());
    CHECK(s.decided[0] == inputs[0]);
    CHECK(s.sigs.size() == 3);
  }
}

TEST_CASE("closure rejects forged correct signatures") {
  const auto cfg = config(3, 1, {NodeId{2}});
  const auto keys = sim_keys(3);
  const auto ctx = cfg.replicate_context();
  const EntrySet y{"forged"};

  auto script_with = [&](WitnessedValue wv) {
    std::vector<Forgery> script(cfg.steps());
    ReplicationBundle b{NodeId{2}, ctx.epoch, 2, {ReplicateMsg{NodeId{2}, ctx.epoch, 2, NodeId{0}, {std::move(wv)}}}};
    script[1][{NodeId{2}, NodeId{1}}] = b;
    return script;
  };

  SUBCASE("verifying signature never sent by its owner") {
    WitnessedValue wv{y, NodeId{0}, {}};
    wv.witnesses.emplace(NodeId{0}, sign(keys[0], ctx.payload(y, NodeId{0})).bytes);
    wv.witnesses.emplace(NodeId{2}, sign(keys[2], ctx.payload(y, NodeId{0})).bytes);
    ScriptedAdversary adv("forger", script_with(wv));
    const auto t = run(cfg, adv, inputs_for(3));
    CHECK_FALSE(t.valid);
    CHECK(t.invalid_reason.find("never sent") != std::string::npos);
  }
  SUBCASE("garbage bytes are tolerated and dropped") {
    WitnessedValue wv{y, NodeId{0}, {}};
    wv.witnesses.emplace(NodeId{0}, Bytes(32, 0xee));
    wv.witnesses.emplace(NodeId{2}, sign(keys[2], ctx.payload(y, NodeId{0})).bytes);
    ScriptedAdversary adv("garbage", script_with(wv));
    const auto t = run(cfg, adv, inputs_for(3));
    CHECK(t.valid);
    CHECK(all_pass(check_all(t)));
    CHECK_FALSE(t.final_state(NodeId{1}).threads[0].witnessed.contains(y));
  }
  SUBCASE("forging as a correct sender is outside HO minus SHO") {
    std::vector<Forgery> script(cfg.steps());
    script[0][{NodeId{0}, NodeId{1}}] = ReplicationBundle{NodeId{0}, ctx.epoch, 1, {}};
    ScriptedAdversary adv("impersonator", script);
    const auto t = run(cfg, adv, inputs_for(3));
    CHECK_FALSE(t.valid);
  }
}

TEST_CASE("exclusive closure withholds same-step signatures") {
  auto cfg = config(3, 1, {NodeId{2}});
  cfg.closure = ClosureMode::exclusive;
  const auto ctx = cfg.replicate_context();
  // Node 0 signs its own input in step 1; replaying it in step 1 is only
  // allowed under the inclusive reading.
  SilentAdversary silent;
  const auto base = run(cfg, silent, inputs_for(3));
  auto sig = base.ledger.lookup(NodeId{0}, ctx.payload(EntrySet{"v0"}, NodeId{0}), 1);
  REQUIRE(sig.has_value());

  WitnessedValue wv{EntrySet{"v0"}, NodeId{0}, {{NodeId{0}, *sig}}};
  std::vector<Forgery> script(cfg.steps());
  script[0][{NodeId{2}, NodeId{1}}] = ReplicationBundle{NodeId{2}, ctx.epoch, 1, {ReplicateMsg{NodeId{2}, ctx.epoch, 1, NodeId{0}, {wv}}}};

  ScriptedAdversary adv("replay", script);
  CHECK_FALSE(run(cfg, adv, inputs_for(3)).valid);
  cfg.closure = ClosureMode::inclusive;
  ScriptedAdversary adv2("replay", script);
  CHECK(run(cfg, adv2, inputs_for(3)).valid);
}

TEST_CASE("canned attacks keep every property at n=5, f=2") {
  for (const std::string attack :
       {"honest", "silent", "crash", "equivocation", "last_round_injection_f", "last_round_injection_f1",
        "signature_padding", "cross_thread_replay", "premature_exit"}) {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      auto s = scenario(attack, 5, 2, seed);
      const auto t = run_scenario(s);
      INFO(attack << " seed " << seed);
      REQUIRE(t.valid);
      const auto verdicts = check_all(t);
      CHECK_MESSAGE(all_pass(verdicts), describe_failures(verdicts));
    }
  }
}

TEST_CASE("equivocating primaries end with an empty slot") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = scenario("equivocation", 5, 2, seed);
    const auto t = run_scenario(s);
    REQUIRE(t.valid);
    for (auto q : s.cfg.faulty) {
      for (auto i : s.cfg.correct()) CHECK(t.final_state(i).decided[q.value].empty());
    }
  }
}

TEST_CASE("late injection needs a correct witness") {
  const NodeSet faulty{NodeId{3}, NodeId{4}};
  const auto y = LastRoundInjectionAdversary::injected();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = scenario("last_round_injection_f", 5, 2, seed, {}, faulty);
    const auto t = run_scenario(s);
    REQUIRE(t.valid);
    for (auto i : s.cfg.correct()) CHECK_FALSE(t.final_state(i).threads[3].witnessed.contains(y));
    CHECK(all_pass(check_all(t)));
  }
  auto s = scenario("last_round_injection_f1", 5, 2, 1, {}, faulty);
  const auto t = run_scenario(s);
  REQUIRE(t.valid);
  for (auto i : s.cfg.correct()) CHECK(t.final_state(i).threads[3].witnessed.contains(y));
  CHECK(all_pass(check_all(t)));
}

TEST_CASE("cross-thread replay only breaks the unbound variant") {
  const NodeSet faulty{NodeId{3}, NodeId{4}};
  ProtocolParams unbound;
  unbound.binding = VoteBinding::unbound;

  auto fixed = scenario("cross_thread_replay", 5, 2, 7, {}, faulty);
  const auto good = run_scenario(fixed);
  REQUIRE(good.valid);
  CHECK(all_pass(check_all(good)));

  auto flawed = scenario("cross_thread_replay", 5, 2, 7, unbound, faulty);
  const auto bad = run_scenario(flawed);
  REQUIRE(bad.valid);
  const auto verdicts = check_all(bad);
  CHECK(any_failure(verdicts));
  CHECK_FALSE(check_thread_validity(bad).pass);
  // The replayed value reached node 0's own thread at the other correct nodes.
  CHECK(bad.final_state(NodeId{1}).threads[0].witnessed.contains(CrossThreadReplayAdversary::replayed()));
}

TEST_CASE("premature exit only breaks the early-return variant") {
  const NodeSet faulty{NodeId{3}, NodeId{4}};
  ProtocolParams early;
  early.early_return = true;

  auto fixed = scenario("premature_exit", 5, 2, 3, {}, faulty);
  const auto good = run_scenario(fixed);
  REQUIRE(good.valid);
  CHECK(all_pass(check_all(good)));

  auto flawed = scenario("premature_exit", 5, 2, 3, early, faulty);
  const auto bad = run_scenario(flawed);
  REQUIRE(bad.valid);
  CHECK_FALSE(check_thread_agreement(bad).pass);
  CHECK_FALSE(check_agreement(bad).pass);
}

TEST_CASE("runs are deterministic and replayable") {
  for (const std::string attack : {"crash", "equivocation", "signature_padding", "last_round_injection_f"}) {
    auto a = scenario(attack, 5, 2, 11);
    auto b = scenario(attack, 5, 2, 11);
    const auto ta = run_scenario(a);
    const auto tb = run_scenario(b);
    const auto dump = dump_trace(ta);
    CHECK(dump == dump_trace(tb));
    CHECK(ta.states == tb.states);

    const auto replay = replay_trace(dump);
    CHECK_MESSAGE(replay.matches, attack);
    CHECK(replay.trace.states == ta.states);
  }
  auto a = scenario("crash", 5, 2, 11);
  auto c = scenario("crash", 5, 2, 12);
  CHECK(dump_trace(run_scenario(a)) != dump_trace(run_scenario(c)));
}

TEST_CASE("trace dump layout") {
  auto s = scenario("equivocation", 3, 1, 2, {}, {NodeId{2}});
  const auto dump = dump_trace(run_scenario(s));
  CHECK(dump.rfind("logres-trace 1\nn 3\nf 1\nfaulty 2\n", 0) == 0);
  CHECK(dump.find("\nforge 1 2 0 ") != std::string::npos);
  CHECK(dump.find(" forged\n") != std::string::npos);
  CHECK(dump.find(" prescribed\n") != std::string::npos);
  CHECK(dump.find("\nstate 3 0 ") != std::string::npos);
  CHECK(dump.find("\ncert 0 ") != std::string::npos);
  CHECK(dump.size() >= 12);
  CHECK(dump.substr(dump.size() - 12) == "valid 1\nend\n");

  CHECK_THROWS_AS(replay_trace("hello\n"), std::invalid_argument);
  CHECK_THROWS_AS(replay_trace("logres-trace 1\nn 3\nf 1\nfaulty 2\nforge 1 2 0 zz\n"), std::exception);
}

TEST_CASE("weak bound keeps replication agreement when n <= 2f") {
  ScenarioOptions opts;
  opts.mode = BoundMode::weak;
  for (const std::string attack : {"silent", "crash", "equivocation", "signature_padding", "last_round_injection_f"}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto s = make_scenario(attack, 4, 2, seed, opts);
      const auto t = run_scenario(s);
      REQUIRE(t.valid);
      CHECK(check_thread_agreement(t).pass);
      CHECK(check_thread_validity(t).pass);
      CHECK(all_pass(check_all(t)));
    }
  }
}

TEST_CASE("quorum overlap holds up to seven nodes") {
  for (unsigned n = 1; n <= 7; ++n) CHECK_FALSE(overlap_counterexample(n).has_value());
}

TEST_CASE("campaign config parsing") {
  const auto cfg = parse_campaign(
      "# sample\n"
      "n = 5\n"
      "f = 2\n"
      "faulty = 1,4\n"
      "mode = weak\n"
      "adversary = crash   # trailing comment\n"
      "seed = 9\n"
      "runs = 12\n"
      "rounds = 2\n"
      "closure = exclusive\n"
      "binding = unbound\n"
      "early_return = true\n"
      "domain = a,b\n"
      "budget = 3\n");
  CHECK(cfg.n == 5);
  CHECK(cfg.f == 2);
  CHECK(*cfg.faulty == NodeSet{NodeId{1}, NodeId{4}});
  CHECK(cfg.mode == BoundMode::weak);
  CHECK(cfg.adversary == "crash");
  CHECK(cfg.seed == 9);
  CHECK(cfg.runs == 12);
  CHECK(cfg.rounds == 2);
  CHECK(cfg.closure == ClosureMode::exclusive);
  CHECK(cfg.binding == VoteBinding::unbound);
  CHECK(cfg.early_return);
  CHECK(cfg.domain == std::vector<std::string>{"a", "b"});
  CHECK(*cfg.budget == 3);
  CHECK(cfg.params().rounds_for(2) == 2);

  CHECK_THROWS_AS(parse_campaign("n = five\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_campaign("colour = red\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_campaign("n 5\n"), std::invalid_argument);
  try {
    parse_campaign("n = 3\n\nmode = sideways\n");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("campaigns aggregate verdicts") {
  CampaignConfig cfg;
  cfg.adversary = "equivocation";
  cfg.runs = 10;
  const auto report = run_campaign(cfg);
  CHECK(report.runs == 10);
  CHECK(report.passed == 10);
  CHECK(report.failed == 0);
  CHECK(report.invalid == 0);
  CHECK_FALSE(report.first_failure.has_value());

  cfg.adversary = "cross_thread_replay";
  cfg.binding = VoteBinding::unbound;
  cfg.faulty = NodeSet{NodeId{3}, NodeId{4}};
  const auto flawed = run_campaign(cfg);
  CHECK(flawed.failed > 0);
  CHECK(flawed.failures_by_property.contains("thread-validity"));
  REQUIRE(flawed.first_failure.has_value());
}
