#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "logres/sim/model.hpp"

namespace logres::sim {

/// Faulty nodes never send anything.
class SilentAdversary : public Adversary {
 public:
  std::string name() const override { return "silent"; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;
};

/// Faulty nodes behave exactly like correct ones.
class HonestAdversary : public Adversary {
 public:
  std::string name() const override { return "honest"; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;
};

/// Each faulty node runs correctly until a random crash step, delivers to a
/// random subset of receivers in that step, and is silent afterwards.
class CrashAdversary : public Adversary {
 public:
  std::string name() const override { return "crash"; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;

 private:
  std::map<NodeId, Step> crash_at_;
};

/// Every faulty primary sends a different value to each correct node in
/// round 1.
class EquivocationAdversary : public Adversary {
 public:
  std::string name() const override { return "equivocation"; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;
};

/// A faulty primary introduces a fresh value late. With `extra_witness`
/// false the value appears only in the last round carrying the f faulty
/// signatures; with it true the value is first shown to one correct node in
/// round f so that it gains a correct witness.
class LastRoundInjectionAdversary : public Adversary {
 public:
  explicit LastRoundInjectionAdversary(bool extra_witness) : extra_witness_(extra_witness) {}
  std::string name() const override {
    return extra_witness_ ? "last_round_injection_f1" : "last_round_injection_f";
  }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;

  static EntrySet injected() { return EntrySet{"injected-late"}; }

 private:
  bool extra_witness_;
  std::optional<NodeSet> targets_;
};

/// Faulty nodes follow the protocol but pad every value they send with
/// signatures from all faulty nodes, and the faulty primary re-sends its
/// input in round f carrying them.
class SignaturePaddingAdversary : public Adversary {
 public:
  std::string name() const override { return "signature_padding"; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;
};

/// Reuses a correct node's signature from one thread as a witness in
/// another. Only effective against VoteBinding::unbound.
class CrossThreadReplayAdversary : public Adversary {
 public:
  std::string name() const override { return "cross_thread_replay"; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;

  static EntrySet replayed() { return EntrySet{"replayed"}; }
};

/// A faulty primary shows one value to a single correct node and another
/// to the rest. Only effective against the early-return variant.
class PrematureExitAdversary : public Adversary {
 public:
  std::string name() const override { return "premature_exit"; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;
};

/// Replays a fixed list of forgeries, one per step.
class ScriptedAdversary : public Adversary {
 public:
  ScriptedAdversary(std::string name, std::vector<Forgery> script) : name_(std::move(name)), script_(std::move(script)) {}
  std::string name() const override { return name_; }
  Forgery forge(const RoundView& view, std::mt19937_64& rng) override;

 private:
  std::string name_;
  std::vector<Forgery> script_;
};

std::vector<std::string> attack_names();
/// Throws std::invalid_argument for an unknown name.
std::unique_ptr<Adversary> make_adversary(std::string_view name);

/// A complete seeded run description for one canned attack.
struct Scenario {
  FaultConfig cfg;
  std::vector<EntrySet> inputs;
  std::unique_ptr<Adversary> adversary;
  std::uint64_t seed = 0;
};

struct ScenarioOptions {
  ProtocolParams params;
  ClosureMode closure = ClosureMode::inclusive;
  BoundMode mode = BoundMode::strict;
  /// Explicit faulty set; otherwise f nodes are drawn from the seed
  /// ("none" always uses the empty set).
  std::optional<NodeSet> faulty;
};

/// Draws the faulty set and per-node inputs from `seed` and pairs them with
/// the named adversary.
Scenario make_scenario(std::string_view attack, std::uint16_t n, std::uint16_t f, std::uint64_t seed,
                       const ScenarioOptions& opts = {});
Trace run_scenario(Scenario& s);

}  // namespace logres::sim
