#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "logres/crypto.hpp"
#include "logres/entry.hpp"

namespace logres {

using Round = std::uint32_t;

/// A value from a given primary together with the signatures of the nodes
/// that testify to having witnessed it. Every signature covers
/// vote_payload(value, primary).
struct WitnessedValue {
  EntrySet value;
  NodeId primary;
  std::map<NodeId, Bytes> witnesses;

  std::set<NodeId> witness_ids() const;
  auto operator<=>(const WitnessedValue&) const = default;
};

/// All votes one sender addresses to one thread in one round.
struct ReplicateMsg {
  NodeId sender;
  std::uint64_t epoch = 0;
  Round round = 0;
  NodeId primary;
  std::vector<WitnessedValue> values;

  auto operator<=>(const ReplicateMsg&) const = default;
};

/// sender (u16) || epoch (u64) || round (u32) || primary (u16) || value count (u32)
/// || per value: entry set || witness count (u16) || per witness: id (u16) || sig (u16 len + bytes)
void encode_replicate_msg(Writer& w, const ReplicateMsg& m);
ReplicateMsg decode_replicate_msg(Reader& r);

/// Parameters shared by every thread of one replication run.
struct ReplicateContext {
  std::uint16_t n = 0;
  std::uint64_t epoch = 0;
  /// Number of replication rounds, f + 1 for the protocol proper.
  Round rounds = 0;
  VoteBinding binding = VoteBinding::primary_bound;
  /// Flawed variant: a responder stops at its first acceptance.
  bool early_return = false;

  Bytes payload(const EntrySet& x, NodeId primary) const {
    return vote_payload(binding, x, primary, epoch);
  }
};

enum class Role : std::uint8_t { primary, responder };

/// Per-(node, primary) state of one Replicate instance.
struct ThreadState {
  Role role = Role::responder;
  NodeId self;
  NodeId primary;
  /// Only meaningful for the primary.
  EntrySet input;
  /// d: current decision, empty by default.
  EntrySet decision;
  /// P: every value accepted from the primary so far.
  std::set<EntrySet> witnessed;
  /// M': votes accepted in the last processed round.
  std::vector<WitnessedValue> round_votes;
  /// S: newly accepted values, forwarded with our signature next round.
  std::vector<WitnessedValue> pending;
  Round rounds_processed = 0;
  /// Early-return variant only: the thread stopped before the final round.
  bool finalized = false;

  auto operator<=>(const ThreadState&) const = default;
};

/// Counts of inputs dropped while advancing a thread.
struct DropCounters {
  std::uint64_t duplicate_sender = 0;
  std::uint64_t wrong_context = 0;
  std::uint64_t bad_signature = 0;
  std::uint64_t under_witnessed = 0;
};

ThreadState thread_init(NodeId self, NodeId primary, EntrySet input);

/// Messages this thread emits in round r, keyed by recipient. The primary
/// broadcasts its input in round 1 only; a responder forwards its pending
/// values, countersigned, to every node except itself and the primary.
std::map<NodeId, ReplicateMsg> thread_send(const ThreadState& state, Round r, const KeyPair& signer,
                                           const ReplicateContext& ctx);

/// Processes the inbox of round r. Votes with invalid signatures, for another
/// primary, or with fewer than r witnesses (primary included) are dropped.
/// Witness sets for the same value are merged across messages.
ThreadState thread_next(ThreadState state, Round r, std::span<const ReplicateMsg> inbox,
                        const PublicRegistry& reg, const ReplicateContext& ctx,
                        DropCounters* drops = nullptr);

/// Final value of the thread. Throws std::logic_error if called before all
/// replication rounds were processed (unless the flawed early-return variant
/// already finalized the thread).
EntrySet thread_decide(const ThreadState& state, const ReplicateContext& ctx);

}  // namespace logres
