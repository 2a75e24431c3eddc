#include "logres/sim/attacks.hpp"

#include <stdexcept>

namespace logres::sim {

namespace {

NodeId first_faulty(const FaultConfig& cfg) {
  if (cfg.faulty.empty()) throw std::invalid_argument("attack needs at least one faulty node");
  return *cfg.faulty.begin();
}

NodeId first_correct(const FaultConfig& cfg) {
  auto c = cfg.correct();
  if (c.empty()) throw std::invalid_argument("attack needs at least one correct node");
  return *c.begin();
}

/// Every faulty node sends its shadow traffic to every correct node.
Forgery shadow_forgery(const RoundView& v) {
  Forgery out;
  for (auto j : v.cfg->faulty) {
    for (auto i : v.cfg->correct()) {
      if (auto m = v.shadow(j, i)) out.emplace(std::make_pair(j, i), std::move(*m));
    }
  }
  return out;
}

ReplicationBundle& bundle_at(Forgery& fg, const RoundView& v, NodeId from, NodeId to) {
  auto [it, fresh] = fg.try_emplace({from, to}, ReplicationBundle{from, v.context().epoch, v.step, {}});
  return std::get<ReplicationBundle>(it->second);
}

ReplicateMsg& thread_msg(ReplicationBundle& b, NodeId primary) {
  for (auto& m : b.msgs) {
    if (m.primary == primary) return m;
  }
  b.msgs.push_back(ReplicateMsg{b.sender, b.epoch, b.round, primary, {}});
  return b.msgs.back();
}

/// Removes everything faulty senders would say in thread `primary`.
void strip_thread(Forgery& fg, NodeId primary) {
  for (auto& [key, msg] : fg) {
    if (auto* b = std::get_if<ReplicationBundle>(&msg)) {
      std::erase_if(b->msgs, [&](const ReplicateMsg& m) { return m.primary == primary; });
    }
  }
}

}  // namespace

Forgery SilentAdversary::forge(const RoundView&, std::mt19937_64&) { return {}; }

Forgery HonestAdversary::forge(const RoundView& view, std::mt19937_64&) { return shadow_forgery(view); }

Forgery CrashAdversary::forge(const RoundView& view, std::mt19937_64& rng) {
  if (crash_at_.empty()) {
    // steps() + 1 means the node never crashes within this run.
    std::uniform_int_distribution<Step> pick(1, view.cfg->steps() + 1);
    for (auto j : view.cfg->faulty) crash_at_[j] = pick(rng);
  }
  Forgery out;
  for (auto j : view.cfg->faulty) {
    const Step at = crash_at_.at(j);
    if (view.step > at) continue;
    for (auto i : view.cfg->correct()) {
      // Partial delivery in the crash step itself.
      if (view.step == at && rng() % 2 == 0) continue;
      if (auto m = view.shadow(j, i)) out.emplace(std::make_pair(j, i), std::move(*m));
    }
  }
  return out;
}

Forgery EquivocationAdversary::forge(const RoundView& view, std::mt19937_64&) {
  auto out = shadow_forgery(view);
  if (view.step != 1 || view.signing()) return out;
  for (auto q : view.cfg->faulty) {
    strip_thread(out, q);
    for (auto i : view.cfg->correct()) {
      EntrySet x{"equivocate-" + std::to_string(q.value) + "-" + std::to_string(i.value)};
      thread_msg(bundle_at(out, view, q, i), q).values.push_back(view.witnessed(x, q, {q}));
    }
  }
  return out;
}

Forgery LastRoundInjectionAdversary::forge(const RoundView& view, std::mt19937_64& rng) {
  auto out = shadow_forgery(view);
  if (view.signing()) return out;
  const NodeId q = first_faulty(*view.cfg);
  const Round R = view.cfg->replication_rounds();
  const auto y = injected();
  const auto correct = view.cfg->correct();

  if (!extra_witness_) {
    if (view.step != R) return out;
    if (!targets_) {
      targets_.emplace();
      for (auto i : correct) {
        if (rng() % 2 == 0) targets_->insert(i);
      }
      if (targets_->empty()) targets_->insert(*correct.begin());
    }
    for (auto i : *targets_) thread_msg(bundle_at(out, view, q, i), q).values.push_back(view.witnessed(y, q, view.cfg->faulty));
    return out;
  }

  if (R < 2) return out;
  const NodeId c0 = first_correct(*view.cfg);
  if (view.step == R - 1) {
    thread_msg(bundle_at(out, view, q, c0), q).values.push_back(view.witnessed(y, q, view.cfg->faulty));
  } else if (view.step == R) {
    NodeSet w = view.cfg->faulty;
    w.insert(c0);
    for (auto i : correct) {
      if (i == c0) continue;
      thread_msg(bundle_at(out, view, q, i), q).values.push_back(view.witnessed(y, q, w));
    }
  }
  return out;
}

Forgery SignaturePaddingAdversary::forge(const RoundView& view, std::mt19937_64&) {
  auto out = shadow_forgery(view);
  if (view.signing()) return out;
  const auto ctx = view.context();
  for (auto& [key, msg] : out) {
    for (auto& m : std::get<ReplicationBundle>(msg).msgs) {
      for (auto& v : m.values) {
        const auto payload = ctx.payload(v.value, m.primary);
        for (auto j : view.cfg->faulty) {
          if (!v.witnesses.contains(j)) v.witnesses.emplace(j, *view.signature(j, payload));
        }
      }
    }
  }
  const Step resend = std::max<Step>(view.cfg->f, 1);
  if (view.step == resend) {
    const NodeId q = first_faulty(*view.cfg);
    const auto& input = (*view.nodes)[q.value].state().threads[q.value].input;
    for (auto i : view.cfg->correct()) {
      auto& tm = thread_msg(bundle_at(out, view, q, i), q);
      std::erase_if(tm.values, [&](const WitnessedValue& v) { return v.value == input; });
      tm.values.push_back(view.witnessed(input, q, view.cfg->faulty));
    }
  }
  return out;
}

Forgery CrossThreadReplayAdversary::forge(const RoundView& view, std::mt19937_64&) {
  auto out = shadow_forgery(view);
  if (view.signing()) return out;
  const NodeId q = first_faulty(*view.cfg);
  const NodeId c0 = first_correct(*view.cfg);
  const Round R = view.cfg->replication_rounds();
  const auto y = replayed();
  strip_thread(out, q);
  if (view.step == 1) {
    thread_msg(bundle_at(out, view, q, c0), q).values.push_back(view.witnessed(y, q, {q}));
  }
  if (view.step == R && R >= 2) {
    // c0 countersigned y for thread q in round 2; present that signature as a
    // witness for y in c0's own thread.
    auto replay = view.ledger->lookup(c0, view.context().payload(y, q), view.closure_limit());
    if (!replay) return out;
    auto forged = view.witnessed(y, c0, view.cfg->faulty);
    forged.witnesses[c0] = *replay;
    for (auto i : view.cfg->correct()) {
      if (i == c0) continue;
      thread_msg(bundle_at(out, view, q, i), c0).values.push_back(forged);
    }
  }
  return out;
}

Forgery PrematureExitAdversary::forge(const RoundView& view, std::mt19937_64&) {
  auto out = shadow_forgery(view);
  if (view.signing()) return out;
  const NodeId q = first_faulty(*view.cfg);
  const NodeId c0 = first_correct(*view.cfg);
  strip_thread(out, q);
  if (view.step == 1) {
    for (auto i : view.cfg->correct()) {
      EntrySet x{i == c0 ? "early-y" : "early-z"};
      thread_msg(bundle_at(out, view, q, i), q).values.push_back(view.witnessed(x, q, {q}));
    }
  }
  return out;
}

Forgery ScriptedAdversary::forge(const RoundView& view, std::mt19937_64&) {
  if (view.step == 0 || view.step > script_.size()) return {};
  return script_[view.step - 1];
}

std::vector<std::string> attack_names() {
  return {"none",
          "silent",
          "honest",
          "crash",
          "equivocation",
          "last_round_injection_f",
          "last_round_injection_f1",
          "signature_padding",
          "cross_thread_replay",
          "premature_exit"};
}

std::unique_ptr<Adversary> make_adversary(std::string_view name) {
  if (name == "none" || name == "silent") return std::make_unique<SilentAdversary>();
  if (name == "honest") return std::make_unique<HonestAdversary>();
  if (name == "crash") return std::make_unique<CrashAdversary>();
  if (name == "equivocation") return std::make_unique<EquivocationAdversary>();
  if (name == "last_round_injection_f") return std::make_unique<LastRoundInjectionAdversary>(false);
  if (name == "last_round_injection_f1") return std::make_unique<LastRoundInjectionAdversary>(true);
  if (name == "signature_padding") return std::make_unique<SignaturePaddingAdversary>();
  if (name == "cross_thread_replay") return std::make_unique<CrossThreadReplayAdversary>();
  if (name == "premature_exit") return std::make_unique<PrematureExitAdversary>();
  throw std::invalid_argument("unknown adversary: " + std::string(name));
}

Scenario make_scenario(std::string_view attack, std::uint16_t n, std::uint16_t f, std::uint64_t seed,
                       const ScenarioOptions& opts) {
  Scenario s;
  s.adversary = make_adversary(attack);
  s.seed = seed;
  s.cfg.n = n;
  s.cfg.f = f;
  s.cfg.mode = opts.mode;
  s.cfg.params = opts.params;
  s.cfg.closure = opts.closure;

  // Separate stream from the adversary's so both stay stable independently.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  if (opts.faulty) {
    s.cfg.faulty = *opts.faulty;
  } else if (attack != "none") {
    std::vector<NodeId> pool;
    for (std::uint16_t i = 0; i < n; ++i) pool.push_back(NodeId{i});
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::uint16_t k = 0; k < f && k < n; ++k) s.cfg.faulty.insert(pool[k]);
  }

  static const std::vector<std::string> pool{"alpha", "bravo", "charlie", "delta", "echo", "foxtrot"};
  s.inputs.resize(n);
  for (std::uint16_t i = 0; i < n; ++i) {
    for (const auto& e : pool) {
      if (rng() % 2 == 0) s.inputs[i].insert(Entry::from_string(e));
    }
    if (rng() % 2 == 0) s.inputs[i].insert(Entry::from_string("own-" + std::to_string(i)));
  }
  // The replay attack only shows when c0 holds something nobody else has.
  if (!s.cfg.correct().empty()) {
    s.inputs[s.cfg.correct().begin()->value].insert(Entry::from_string("private-c0"));
  }
  s.cfg.validate();
  return s;
}

Trace run_scenario(Scenario& s) { return run_lockstep(s.cfg, *s.adversary, s.inputs, s.seed); }

}  // namespace logres::sim
