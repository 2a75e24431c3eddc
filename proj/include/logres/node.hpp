#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "logres/crypto.hpp"
#include "logres/log.hpp"
#include "logres/replicate.hpp"

namespace logres {

/// Knobs of the main protocol. The defaults are the protocol proper; the
/// other settings exist to reproduce known-flawed variants.
struct ProtocolParams {
  /// 0 means f + 1.
  Round replication_rounds = 0;
  VoteBinding binding = VoteBinding::primary_bound;
  bool early_return = false;
  std::size_t max_entry_size = kDefaultMaxEntrySize;

  Round rounds_for(std::uint16_t f) const { return replication_rounds ? replication_rounds : Round(f) + 1; }
};

/// The per-round replication traffic from one sender to one recipient: one
/// ReplicateMsg per thread with something to say.
struct ReplicationBundle {
  NodeId sender;
  std::uint64_t epoch = 0;
  Round round = 0;
  std::vector<ReplicateMsg> msgs;

  auto operator<=>(const ReplicationBundle&) const = default;
};

/// A node's signature over the digest of the log it constructed.
struct LogSigMsg {
  NodeId sender;
  std::uint64_t epoch = 0;
  Digest digest{};
  Bytes sig;

  auto operator<=>(const LogSigMsg&) const = default;
};

using NodeMessage = std::variant<ReplicationBundle, LogSigMsg>;

enum class PhaseKind : std::uint8_t { collection, replication, signing, published, failed };

struct Phase {
  PhaseKind kind = PhaseKind::collection;
  /// Current replication round (1-based); zero outside replication.
  Round round = 0;

  auto operator<=>(const Phase&) const = default;
};

std::string_view to_string(PhaseKind k);

/// The node state record: per-primary threads, collected entries, current log
/// and the signatures gathered for the candidate log.
struct NodeState {
  NodeId self;
  Phase phase;
  /// Indexed by primary.
  std::vector<ThreadState> threads;
  EntrySet entries;
  Log log;
  std::map<NodeId, Signature> sigs;
  std::optional<Log> candidate;
  std::optional<Digest> candidate_digest;
  /// X_1..X_n once replication finished.
  std::vector<EntrySet> decided;

  auto operator<=>(const NodeState&) const = default;
};

enum class CollectResult : std::uint8_t { added, duplicate, oversized, wrong_phase };

std::string_view to_string(CollectResult r);

struct NodeDiagnostics {
  DropCounters replicate;
  std::uint64_t dropped_bundles = 0;
  std::uint64_t dropped_sigs = 0;
  std::uint64_t liveness_failures = 0;
};

/// One node running the main protocol: collection, n parallel Replicate
/// threads, log construction and the signing round.
class Node {
 public:
  Node(KeyPair key, std::shared_ptr<const PublicRegistry> registry, ProtocolParams params, Log genesis);

  const NodeState& state() const { return state_; }
  NodeId id() const { return state_.self; }
  std::uint16_t n() const { return registry_->n(); }
  std::uint16_t f() const { return registry_->f(); }
  Round replication_rounds() const { return params_.rounds_for(f()); }
  /// Epoch of the log under construction.
  std::uint64_t target_epoch() const { return state_.log.epoch + 1; }
  const ProtocolParams& params() const { return params_; }
  const PublicRegistry& registry() const { return *registry_; }
  const KeyPair& key() const { return key_; }
  const NodeDiagnostics& diagnostics() const { return diag_; }
  const std::optional<LogCertificate>& certificate() const { return certificate_; }

  CollectResult collect(Entry e);
  void begin_replication();

  /// Bundles for the current round, one per recipient with non-empty traffic.
  std::map<NodeId, ReplicationBundle> replication_send() const;
  /// Routes each message to its thread and advances every thread. After the
  /// final round, decides all threads and moves to the signing phase.
  void replication_next(std::span<const ReplicationBundle> inbox);

  /// Builds the candidate log and returns our signature over its digest.
  LogSigMsg signing_send(UnixMillis now, Millis period);
  /// Collects matching signatures. Publishes once f+1 distinct signers
  /// (ourselves included) are present; otherwise records a liveness failure.
  std::optional<LogCertificate> signing_next(std::span<const LogSigMsg> inbox);

  /// Leaves a finished epoch. Entries not yet in the log carry over.
  void start_next_epoch();
  /// Catch-up: replaces the current log with a newer certified one. The caller
  /// is responsible for validating the certificate first.
  void adopt(const LogCertificate& cert);

 private:
  ReplicateContext context() const;
  void require_phase(PhaseKind k) const;

  KeyPair key_;
  std::shared_ptr<const PublicRegistry> registry_;
  ProtocolParams params_;
  NodeState state_;
  std::optional<LogCertificate> certificate_;
  NodeDiagnostics diag_;
};

}  // namespace logres
