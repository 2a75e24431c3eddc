#include "logres/node.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace logres {

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::collection: return "collection";
    case PhaseKind::replication: return "replication";
    case PhaseKind::signing: return "signing";
    case PhaseKind::published: return "published";
    case PhaseKind::failed: return "failed";
  }
  return "unknown";
}

std::string_view to_string(CollectResult r) {
  switch (r) {
    case CollectResult::added: return "added";
    case CollectResult::duplicate: return "duplicate";
    case CollectResult::oversized: return "oversized";
    case CollectResult::wrong_phase: return "wrong_phase";
  }
  return "unknown";
}

Node::Node(KeyPair key, std::shared_ptr<const PublicRegistry> registry, ProtocolParams params, Log genesis)
    : key_(std::move(key)), registry_(std::move(registry)), params_(params) {
  if (!registry_) throw std::invalid_argument("registry required");
  if (!registry_->contains(key_.node)) throw std::invalid_argument("node id not in registry");
  if (key_.scheme != registry_->scheme()) throw std::invalid_argument("key scheme does not match registry");
  if (params_.max_entry_size == 0 || params_.max_entry_size > kHardMaxEntrySize) {
    throw std::invalid_argument("max entry size out of range");
  }
  state_.self = key_.node;
  state_.log = std::move(genesis);
}

ReplicateContext Node::context() const {
  return ReplicateContext{n(), target_epoch(), replication_rounds(), params_.binding, params_.early_return};
}

void Node::require_phase(PhaseKind k) const {
  if (state_.phase.kind != k) {
    throw std::logic_error("operation requires phase " + std::string(to_string(k)) + ", node is in " +
                           std::string(to_string(state_.phase.kind)));
  }
}

CollectResult Node::collect(Entry e) {
  if (state_.phase.kind != PhaseKind::collection) return CollectResult::wrong_phase;
  if (e.size() > params_.max_entry_size) return CollectResult::oversized;
  if (state_.log.entries.contains(e)) return CollectResult::duplicate;
  return state_.entries.insert(std::move(e)) ? CollectResult::added : CollectResult::duplicate;
}

void Node::begin_replication() {
  require_phase(PhaseKind::collection);
  state_.threads.clear();
  state_.threads.reserve(n());
  for (std::uint16_t p = 0; p < n(); ++p) state_.threads.push_back(thread_init(state_.self, NodeId{p}, state_.entries));
  state_.sigs.clear();
  state_.candidate.reset();
  state_.candidate_digest.reset();
  state_.decided.clear();
  certificate_.reset();
  state_.phase = Phase{PhaseKind::replication, 1};
}

std::map<NodeId, ReplicationBundle> Node::replication_send() const {
  require_phase(PhaseKind::replication);
  const auto ctx = context();
  const Round r = state_.phase.round;
  std::map<NodeId, ReplicationBundle> out;
  for (const auto& thread : state_.threads) {
    for (auto& [to, msg] : thread_send(thread, r, key_, ctx)) {
      auto [it, fresh] = out.try_emplace(to);
      if (fresh) it->second = ReplicationBundle{state_.self, ctx.epoch, r, {}};
      it->second.msgs.push_back(std::move(msg));
    }
  }
  return out;
}

void Node::replication_next(std::span<const ReplicationBundle> inbox) {
  require_phase(PhaseKind::replication);
  const auto ctx = context();
  const Round r = state_.phase.round;

  std::vector<std::vector<ReplicateMsg>> routed(n());
  std::set<NodeId> senders;
  for (const auto& bundle : inbox) {
    if (!senders.insert(bundle.sender).second || bundle.epoch != ctx.epoch || bundle.round != r) {
      ++diag_.dropped_bundles;
      continue;
    }
    for (const auto& msg : bundle.msgs) {
      if (msg.primary.value >= n() || msg.sender != bundle.sender) {
        ++diag_.replicate.wrong_context;
        continue;
      }
      routed[msg.primary.value].push_back(msg);
    }
  }
  for (std::uint16_t p = 0; p < n(); ++p) {
    state_.threads[p] = thread_next(std::move(state_.threads[p]), r, routed[p], *registry_, ctx, &diag_.replicate);
  }

  if (r < ctx.rounds) {
    ++state_.phase.round;
    return;
  }
  state_.decided.clear();
  for (const auto& thread : state_.threads) state_.decided.push_back(thread_decide(thread, ctx));
  state_.phase = Phase{PhaseKind::signing, 0};
}

LogSigMsg Node::signing_send(UnixMillis now, Millis period) {
  require_phase(PhaseKind::signing);
  EntrySet x;
  for (const auto& v : state_.decided) x = x.united(v);
  state_.candidate = mk_log(state_.log, x, period, now);
  state_.candidate_digest = mk_digest(*state_.candidate);
  auto own = sign(key_, log_sig_payload(*state_.candidate_digest));
  state_.sigs.clear();
  state_.sigs.emplace(state_.self, own);
  return LogSigMsg{state_.self, target_epoch(), *state_.candidate_digest, own.bytes};
}

std::optional<LogCertificate> Node::signing_next(std::span<const LogSigMsg> inbox) {
  require_phase(PhaseKind::signing);
  if (!state_.candidate_digest) throw std::logic_error("signing_next before signing_send");
  const auto payload = log_sig_payload(*state_.candidate_digest);
  for (const auto& m : inbox) {
    Signature s{m.sender, m.sig};
    if (m.epoch != target_epoch() || m.digest != *state_.candidate_digest || state_.sigs.contains(m.sender) ||
        !verify(*registry_, s, payload)) {
      ++diag_.dropped_sigs;
      continue;
    }
    state_.sigs.emplace(m.sender, std::move(s));
  }

  if (state_.sigs.size() < registry_->quorum()) {
    ++diag_.liveness_failures;
    state_.phase = Phase{PhaseKind::failed, 0};
    return std::nullopt;
  }
  LogCertificate cert{*state_.candidate, {}};
  for (const auto& [id, s] : state_.sigs) cert.sigs.push_back(s);
  state_.log = *state_.candidate;
  state_.entries = state_.entries.minus(state_.log.entries);
  state_.phase = Phase{PhaseKind::published, 0};
  certificate_ = cert;
  return cert;
}

void Node::start_next_epoch() {
  if (state_.phase.kind != PhaseKind::published && state_.phase.kind != PhaseKind::failed) {
    throw std::logic_error("epoch still in progress");
  }
  state_.entries = state_.entries.minus(state_.log.entries);
  state_.threads.clear();
  state_.phase = Phase{PhaseKind::collection, 0};
}

void Node::adopt(const LogCertificate& cert) {
  if (cert.log.epoch <= state_.log.epoch) return;
  state_.log = cert.log;
  state_.entries = state_.entries.minus(state_.log.entries);
  certificate_ = cert;
}

}  // namespace logres
