#include "logres/sim/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace logres::sim {

std::string_view to_string(BoundMode m) { return m == BoundMode::strict ? "strict" : "weak"; }
std::string_view to_string(ClosureMode m) { return m == ClosureMode::inclusive ? "inclusive" : "exclusive"; }

BoundMode bound_mode_from_string(std::string_view s) {
  if (s == "strict") return BoundMode::strict;
  if (s == "weak") return BoundMode::weak;
  throw std::invalid_argument("unknown mode: " + std::string(s));
}

ClosureMode closure_mode_from_string(std::string_view s) {
  if (s == "inclusive") return ClosureMode::inclusive;
  if (s == "exclusive") return ClosureMode::exclusive;
  throw std::invalid_argument("unknown closure mode: " + std::string(s));
}

NodeSet FaultConfig::all() const {
  NodeSet out;
  for (std::uint16_t i = 0; i < n; ++i) out.insert(NodeId{i});
  return out;
}

NodeSet FaultConfig::correct() const {
  NodeSet out;
  for (std::uint16_t i = 0; i < n; ++i) {
    if (!faulty.contains(NodeId{i})) out.insert(NodeId{i});
  }
  return out;
}

NodeSet FaultConfig::ho(NodeId receiver, Step s) const {
  auto it = ho_override.find({s, receiver});
  return it != ho_override.end() ? it->second : all();
}

NodeSet FaultConfig::sho(NodeId receiver, Step s) const {
  auto it = sho_override.find({s, receiver});
  return it != sho_override.end() ? it->second : correct();
}

NodeSet FaultConfig::survivors(Step s) const {
  NodeSet c = all();
  for (Step k = 1; k <= s; ++k) {
    for (std::uint16_t i = 0; i < n; ++i) {
      auto sh = sho(NodeId{i}, k);
      NodeSet keep;
      std::set_intersection(c.begin(), c.end(), sh.begin(), sh.end(), std::inserter(keep, keep.end()));
      c = std::move(keep);
    }
  }
  return c;
}

void FaultConfig::validate() const {
  if (n == 0) throw std::invalid_argument("n must be positive");
  if (mode == BoundMode::strict && n <= 2 * f) throw std::invalid_argument("strict mode requires n > 2f");
  if (mode == BoundMode::weak && n <= f) throw std::invalid_argument("weak mode requires n > f");
  if (faulty.size() > f) throw std::invalid_argument("more faulty nodes than f");
  for (auto id : faulty) {
    if (id.value >= n) throw std::invalid_argument("faulty id out of range");
  }
  if (replication_rounds() == 0) throw std::invalid_argument("at least one replication round required");
  auto check_keys = [&](const auto& overrides) {
    for (const auto& [key, set] : overrides) {
      if (key.first < 1 || key.first > steps() || key.second.value >= n) {
        throw std::invalid_argument("HO/SHO override out of range");
      }
      for (auto id : set) {
        if (id.value >= n) throw std::invalid_argument("HO/SHO member out of range");
      }
    }
  };
  check_keys(ho_override);
  check_keys(sho_override);
  for (Step s = 1; s <= steps(); ++s) {
    for (std::uint16_t i = 0; i < n; ++i) {
      auto h = ho(NodeId{i}, s);
      auto sh = sho(NodeId{i}, s);
      if (!std::includes(h.begin(), h.end(), sh.begin(), sh.end())) {
        throw std::invalid_argument("SHO must be a subset of HO");
      }
    }
  }
  // Nodes that ever drop out of an SHO set count as failed.
  NodeSet failed = faulty;
  auto c = survivors(steps());
  for (auto id : all()) {
    if (!c.contains(id)) failed.insert(id);
  }
  if (failed.size() > f) throw std::invalid_argument("HO/SHO overrides fail more than f nodes");
}

ReplicateContext FaultConfig::replicate_context() const {
  // Every simulated run builds epoch 1 on top of the genesis log.
  return ReplicateContext{n, 1, replication_rounds(), params.binding, params.early_return};
}

std::vector<KeyPair> sim_keys(std::uint16_t n) {
  Seed seed{};
  seed.fill(0x5a);
  std::vector<KeyPair> keys;
  keys.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) keys.push_back(keygen(seed, NodeId{i}, Scheme::hmac_sha256));
  return keys;
}

std::vector<EmbeddedSig> embedded_signatures(const NodeMessage& m, const ReplicateContext& ctx) {
  std::vector<EmbeddedSig> out;
  if (const auto* b = std::get_if<ReplicationBundle>(&m)) {
    for (const auto& msg : b->msgs) {
      for (const auto& v : msg.values) {
        const auto payload = ctx.payload(v.value, msg.primary);
        for (const auto& [id, sig] : v.witnesses) out.push_back(EmbeddedSig{id, sig, payload});
      }
    }
  } else {
    const auto& s = std::get<LogSigMsg>(m);
    out.push_back(EmbeddedSig{s.sender, s.sig, log_sig_payload(s.digest)});
  }
  return out;
}

void SentLedger::record(Step s, NodeId sender, NodeId receiver, const NodeMessage& msg, const ReplicateContext& ctx) {
  records_.push_back(LedgerRecord{s, sender, receiver, msg});
  for (auto& e : embedded_signatures(msg, ctx)) {
    by_sig_[e.signer].try_emplace(e.sig, s);
    by_payload_[e.signer].try_emplace(std::move(e.payload), std::make_pair(std::move(e.sig), s));
  }
}

std::set<Bytes> SentLedger::sigma(NodeId signer, Step s) const {
  std::set<Bytes> out;
  ReplicateContext none{};
  for (const auto& r : records_) {
    if (r.step != s) continue;
    // Payload context is irrelevant here; only the signature bytes are kept.
    for (const auto& e : embedded_signatures(r.msg, none)) {
      if (e.signer == signer) out.insert(e.sig);
    }
  }
  return out;
}

bool SentLedger::contains(NodeId signer, const Bytes& sig, Step up_to) const {
  auto it = by_sig_.find(signer);
  if (it == by_sig_.end()) return false;
  auto jt = it->second.find(sig);
  return jt != it->second.end() && jt->second <= up_to;
}

std::optional<Bytes> SentLedger::lookup(NodeId signer, const Bytes& payload, Step up_to) const {
  auto it = by_payload_.find(signer);
  if (it == by_payload_.end()) return std::nullopt;
  auto jt = it->second.find(payload);
  if (jt == it->second.end() || jt->second.second > up_to) return std::nullopt;
  return jt->second.first;
}

std::set<std::pair<NodeId, Bytes>> SentLedger::observed() const {
  std::set<std::pair<NodeId, Bytes>> out;
  for (const auto& [signer, payloads] : by_payload_) {
    for (const auto& [payload, sig] : payloads) out.emplace(signer, payload);
  }
  return out;
}

bool closure_check(const NodeMessage& msg, Step s, const SentLedger& ledger, const FaultConfig& cfg,
                   const PublicRegistry& reg, std::string* reason) {
  const auto c = cfg.survivors(s);
  const Step limit = cfg.closure == ClosureMode::inclusive ? s : s - 1;
  for (const auto& e : embedded_signatures(msg, cfg.replicate_context())) {
    if (!c.contains(e.signer)) continue;
    if (ledger.contains(e.signer, e.sig, limit)) continue;
    if (verify(reg, Signature{e.signer, e.sig}, e.payload)) {
      if (reason) *reason = "signature by correct node " + to_string(e.signer) + " never sent by step " + std::to_string(limit);
      return false;
    }
  }
  return true;
}

Step RoundView::closure_limit() const { return cfg->closure == ClosureMode::inclusive ? step : step - 1; }

std::optional<Bytes> RoundView::signature(NodeId signer, const Bytes& payload) const {
  if (signer.value >= cfg->n) return std::nullopt;
  if (cfg->is_faulty(signer) || !cfg->survivors(step).contains(signer)) {
    return sign((*keys)[signer.value], payload).bytes;
  }
  return ledger->lookup(signer, payload, closure_limit());
}

WitnessedValue RoundView::witnessed(const EntrySet& value, NodeId primary, const NodeSet& signers) const {
  WitnessedValue v{value, primary, {}};
  const auto payload = context().payload(value, primary);
  for (auto id : signers) {
    if (auto sig = signature(id, payload)) v.witnesses.emplace(id, std::move(*sig));
  }
  return v;
}

std::optional<NodeMessage> RoundView::shadow(NodeId sender, NodeId receiver) const {
  const auto& out = (*outbox)[sender.value];
  auto it = out.find(receiver);
  if (it == out.end()) return std::nullopt;
  return it->second;
}

namespace {

void encode_votes(Writer& w, const std::vector<WitnessedValue>& votes) {
  w.u32(static_cast<std::uint32_t>(votes.size()));
  for (const auto& v : votes) {
    v.value.encode(w);
    w.u16(v.primary.value);
    w.u16(static_cast<std::uint16_t>(v.witnesses.size()));
    for (const auto& [id, sig] : v.witnesses) {
      w.u16(id.value);
      w.bytes16(sig);
    }
  }
}

void encode_thread(Writer& w, const ThreadState& t) {
  w.u8(static_cast<std::uint8_t>(t.role));
  w.u16(t.self.value);
  w.u16(t.primary.value);
  t.input.encode(w);
  t.decision.encode(w);
  w.u32(static_cast<std::uint32_t>(t.witnessed.size()));
  for (const auto& x : t.witnessed) x.encode(w);
  encode_votes(w, t.round_votes);
  encode_votes(w, t.pending);
  w.u32(t.rounds_processed);
  w.u8(t.finalized ? 1 : 0);
}

}  // namespace

Bytes encode_thread_state(const ThreadState& t) {
  Writer w;
  encode_thread(w, t);
  return std::move(w).take();
}

Bytes encode_state(const NodeState& s) {
  Writer w;
  w.u16(s.self.value);
  w.u8(static_cast<std::uint8_t>(s.phase.kind));
  w.u32(s.phase.round);
  w.u32(static_cast<std::uint32_t>(s.threads.size()));
  for (const auto& t : s.threads) encode_thread(w, t);
  s.entries.encode(w);
  encode_log(w, s.log);
  w.u32(static_cast<std::uint32_t>(s.sigs.size()));
  for (const auto& [id, sig] : s.sigs) {
    w.u16(id.value);
    w.bytes16(sig.bytes);
  }
  w.u8(s.candidate ? 1 : 0);
  if (s.candidate) encode_log(w, *s.candidate);
  w.u8(s.candidate_digest ? 1 : 0);
  if (s.candidate_digest) w.raw(*s.candidate_digest);
  w.u32(static_cast<std::uint32_t>(s.decided.size()));
  for (const auto& x : s.decided) x.encode(w);
  return std::move(w).take();
}

LockstepRun::LockstepRun(FaultConfig cfg, std::vector<EntrySet> inputs, std::string adversary_name, std::uint64_t seed)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (inputs.size() != cfg_.n) throw std::invalid_argument("one input set per node required");
  keys_ = sim_keys(cfg_.n);
  reg_ = std::make_shared<const PublicRegistry>(PublicRegistry::from_keypairs(
      keys_, cfg_.f, cfg_.mode == BoundMode::strict ? FaultBound::strict : FaultBound::weak));
  nodes_.reserve(cfg_.n);
  for (std::uint16_t i = 0; i < cfg_.n; ++i) {
    Node node(keys_[i], reg_, cfg_.params, genesis_log());
    for (const auto& e : inputs[i]) {
      if (node.collect(e) == CollectResult::oversized) throw std::invalid_argument("input entry exceeds max size");
    }
    node.begin_replication();
    nodes_.push_back(std::move(node));
  }
  trace_.cfg = cfg_;
  trace_.adversary = std::move(adversary_name);
  trace_.seed = seed;
  trace_.inputs = std::move(inputs);
  trace_.certificates.resize(cfg_.n);
  trace_.states.emplace_back();
  for (const auto& node : nodes_) trace_.states.back().push_back(node.state());
}

void LockstepRun::open_step() {
  if (done()) throw std::logic_error("run already complete");
  if (open_) throw std::logic_error("step already open");
  const Step s = next_step();
  const auto ctx = cfg_.replicate_context();
  outbox_.assign(cfg_.n, {});
  for (auto& node : nodes_) {
    auto& out = outbox_[node.id().value];
    if (!cfg_.signing_step(s)) {
      for (auto& [to, bundle] : node.replication_send()) out.emplace(to, std::move(bundle));
    } else {
      auto msg = node.signing_send(kSimNow, kSimPeriod);
      for (std::uint16_t j = 0; j < cfg_.n; ++j) {
        if (NodeId{j} != node.id()) out.emplace(NodeId{j}, msg);
      }
    }
    if (!cfg_.is_faulty(node.id())) {
      for (const auto& [to, m] : out) trace_.ledger.record(s, node.id(), to, m, ctx);
    }
  }
  trace_.outbox.push_back(outbox_);
  open_ = true;
}

RoundView LockstepRun::view() const {
  if (!open_) throw std::logic_error("no open step");
  return RoundView{next_step(), &cfg_, &trace_.ledger, reg_.get(), &keys_, &nodes_, &outbox_};
}

std::vector<Delivery> LockstepRun::inbox_for(NodeId receiver, const Forgery& forged) const {
  const Step s = next_step();
  std::vector<Delivery> inbox;
  if (cfg_.is_faulty(receiver)) {
    // Shadows see the traffic they would see if every node were correct.
    for (std::uint16_t j = 0; j < cfg_.n; ++j) {
      auto it = outbox_[j].find(receiver);
      if (it != outbox_[j].end()) inbox.push_back(Delivery{NodeId{j}, it->second, false});
    }
    return inbox;
  }
  const auto ho = cfg_.ho(receiver, s);
  const auto sho = cfg_.sho(receiver, s);
  for (std::uint16_t j = 0; j < cfg_.n; ++j) {
    const NodeId sender{j};
    if (sho.contains(sender)) {
      auto it = outbox_[j].find(receiver);
      if (it != outbox_[j].end()) inbox.push_back(Delivery{sender, it->second, false});
    } else if (ho.contains(sender)) {
      auto it = forged.find({sender, receiver});
      if (it != forged.end()) inbox.push_back(Delivery{sender, it->second, true});
    }
  }
  return inbox;
}

void LockstepRun::deliver(Node& node, bool signing, const std::vector<Delivery>& inbox) {
  if (!signing) {
    std::vector<ReplicationBundle> bundles;
    for (const auto& d : inbox) {
      if (const auto* b = std::get_if<ReplicationBundle>(&d.msg)) bundles.push_back(*b);
    }
    node.replication_next(bundles);
  } else {
    std::vector<LogSigMsg> sigs;
    for (const auto& d : inbox) {
      if (const auto* m = std::get_if<LogSigMsg>(&d.msg)) sigs.push_back(*m);
    }
    node.signing_next(sigs);
  }
}

NodeState LockstepRun::preview(NodeId receiver, const Forgery& forged) const {
  if (!open_) throw std::logic_error("no open step");
  Node copy = nodes_.at(receiver.value);
  deliver(copy, cfg_.signing_step(next_step()), inbox_for(receiver, forged));
  return copy.state();
}

void LockstepRun::close_step(const Forgery& forged) {
  if (!open_) throw std::logic_error("no open step");
  const Step s = next_step();
  trace_.forged.push_back(forged);
  for (const auto& [key, msg] : forged) {
    const auto [sender, receiver] = key;
    std::string reason;
    if (sender.value >= cfg_.n || receiver.value >= cfg_.n) {
      reason = "forged message names an unknown node";
    } else if (cfg_.is_faulty(receiver)) {
      continue;
    } else if (!cfg_.ho(receiver, s).contains(sender) || cfg_.sho(receiver, s).contains(sender)) {
      reason = "adversary spoke for " + to_string(sender) + " to " + to_string(receiver) + " outside HO \\ SHO";
    } else if (closure_check(msg, s, trace_.ledger, cfg_, *reg_, &reason)) {
      continue;
    }
    trace_.valid = false;
    trace_.invalid_reason = "step " + std::to_string(s) + ": " + reason;
    open_ = false;
    step_ = cfg_.steps();
    return;
  }

  const bool signing = cfg_.signing_step(s);
  std::vector<std::vector<Delivery>> inboxes;
  inboxes.reserve(cfg_.n);
  for (std::uint16_t i = 0; i < cfg_.n; ++i) inboxes.push_back(inbox_for(NodeId{i}, forged));
  for (std::uint16_t i = 0; i < cfg_.n; ++i) deliver(nodes_[i], signing, inboxes[i]);

  trace_.delivered.push_back(std::move(inboxes));
  trace_.states.emplace_back();
  for (const auto& node : nodes_) trace_.states.back().push_back(node.state());
  if (signing) {
    for (std::uint16_t i = 0; i < cfg_.n; ++i) trace_.certificates[i] = nodes_[i].certificate();
  }
  step_ = s;
  open_ = false;
}

Trace run_lockstep(const FaultConfig& cfg, Adversary& adversary, const std::vector<EntrySet>& inputs,
                   std::uint64_t seed) {
  LockstepRun run(cfg, inputs, adversary.name(), seed);
  std::mt19937_64 rng(seed);
  while (!run.done()) {
    run.open_step();
    auto forged = adversary.forge(run.view(), rng);
    run.close_step(forged);
  }
  return run.trace();
}

}  // namespace logres::sim
