#include "logres/replicate.hpp"

#include <stdexcept>

namespace logres {

std::set<NodeId> WitnessedValue::witness_ids() const {
  std::set<NodeId> ids;
  for (const auto& [id, sig] : witnesses) ids.insert(id);
  return ids;
}

void encode_replicate_msg(Writer& w, const ReplicateMsg& m) {
  w.u16(m.sender.value);
  w.u64(m.epoch);
  w.u32(m.round);
  w.u16(m.primary.value);
  w.u32(static_cast<std::uint32_t>(m.values.size()));
  for (const auto& v : m.values) {
    v.value.encode(w);
    if (v.witnesses.size() > 0xffff) throw EncodeError("too many witnesses");
    w.u16(static_cast<std::uint16_t>(v.witnesses.size()));
    for (const auto& [id, sig] : v.witnesses) {
      w.u16(id.value);
      w.bytes16(sig);
    }
  }
}

ReplicateMsg decode_replicate_msg(Reader& r) {
  ReplicateMsg m;
  m.sender = NodeId{r.u16()};
  m.epoch = r.u64();
  m.round = r.u32();
  m.primary = NodeId{r.u16()};
  auto count = r.u32();
  if (count > r.remaining() / 6) throw DecodeError("value count exceeds input");
  m.values.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    WitnessedValue v;
    v.value = EntrySet::decode(r);
    v.primary = m.primary;
    auto witnesses = r.u16();
    for (std::uint16_t k = 0; k < witnesses; ++k) {
      NodeId id{r.u16()};
      auto sig = r.bytes16();
      if (!v.witnesses.emplace(id, std::move(sig)).second) throw DecodeError("duplicate witness");
    }
    m.values.push_back(std::move(v));
  }
  return m;
}

ThreadState thread_init(NodeId self, NodeId primary, EntrySet input) {
  ThreadState s;
  s.self = self;
  s.primary = primary;
  s.role = self == primary ? Role::primary : Role::responder;
  if (s.role == Role::primary) s.input = std::move(input);
  return s;
}

std::map<NodeId, ReplicateMsg> thread_send(const ThreadState& state, Round r, const KeyPair& signer,
                                           const ReplicateContext& ctx) {
  std::map<NodeId, ReplicateMsg> out;
  std::vector<WitnessedValue> values;
  if (state.role == Role::primary) {
    if (r != 1) return out;
    WitnessedValue v{state.input, state.primary, {}};
    v.witnesses[state.self] = sign(signer, ctx.payload(state.input, state.primary)).bytes;
    values.push_back(std::move(v));
  } else {
    if (state.pending.empty()) return out;
    values = state.pending;
    for (auto& v : values) v.witnesses[state.self] = sign(signer, ctx.payload(v.value, v.primary)).bytes;
  }
  for (std::uint16_t j = 0; j < ctx.n; ++j) {
    NodeId to{j};
    if (to == state.self || to == state.primary) continue;
    out.emplace(to, ReplicateMsg{state.self, ctx.epoch, r, state.primary, values});
  }
  return out;
}

ThreadState thread_next(ThreadState state, Round r, std::span<const ReplicateMsg> inbox,
                        const PublicRegistry& reg, const ReplicateContext& ctx, DropCounters* drops) {
  if (r < 1 || r > ctx.rounds) throw std::logic_error("replication round out of range");
  if (r != state.rounds_processed + 1) throw std::logic_error("replication rounds must be processed in order");
  state.rounds_processed = r;
  state.pending.clear();
  state.round_votes.clear();
  if (state.role == Role::primary || state.finalized) return state;

  DropCounters local;
  auto& d = drops ? *drops : local;

  // Merge witness sets per value, keeping only verifying signatures.
  std::map<EntrySet, std::map<NodeId, Bytes>> merged;
  std::map<EntrySet, Bytes> payloads;
  std::set<NodeId> senders;
  for (const auto& msg : inbox) {
    if (!senders.insert(msg.sender).second) {
      ++d.duplicate_sender;
      continue;
    }
    if (msg.primary != state.primary || msg.round != r || msg.epoch != ctx.epoch) {
      ++d.wrong_context;
      continue;
    }
    for (const auto& wv : msg.values) {
      if (wv.primary != state.primary) {
        ++d.wrong_context;
        continue;
      }
      auto [pit, fresh] = payloads.try_emplace(wv.value);
      if (fresh) pit->second = ctx.payload(wv.value, state.primary);
      auto& slot = merged[wv.value];
      for (const auto& [id, sig] : wv.witnesses) {
        if (slot.contains(id)) continue;
        if (verify(reg, Signature{id, sig}, pit->second)) {
          slot.emplace(id, sig);
        } else {
          ++d.bad_signature;
        }
      }
    }
  }

  std::vector<WitnessedValue> accepted;
  for (auto& [value, witnesses] : merged) {
    if (!witnesses.contains(state.primary) || witnesses.size() < r) {
      ++d.under_witnessed;
      continue;
    }
    accepted.push_back(WitnessedValue{value, state.primary, std::move(witnesses)});
  }

  std::vector<WitnessedValue> fresh_values;
  for (const auto& wv : accepted) {
    if (!state.witnessed.contains(wv.value)) fresh_values.push_back(wv);
  }
  if (!fresh_values.empty()) {
    std::set<EntrySet> all = state.witnessed;
    for (const auto& wv : accepted) all.insert(wv.value);
    state.decision = all.size() == 1 ? *all.begin() : EntrySet{};
    state.pending = fresh_values;
    if (ctx.early_return) state.finalized = true;
  }
  for (const auto& wv : accepted) state.witnessed.insert(wv.value);
  state.round_votes = std::move(accepted);
  return state;
}

EntrySet thread_decide(const ThreadState& state, const ReplicateContext& ctx) {
  if (state.role == Role::primary) {
    if (state.rounds_processed != ctx.rounds) throw std::logic_error("decision requested before the final round");
    return state.input;
  }
  if (!state.finalized && state.rounds_processed != ctx.rounds) {
    throw std::logic_error("decision requested before the final round");
  }
  return state.decision;
}

}  // namespace logres
