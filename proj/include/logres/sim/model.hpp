#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "logres/node.hpp"

namespace logres::sim {

using NodeSet = std::set<NodeId>;

/// Communication step of a run: 1..R are replication rounds, R+1 is the
/// signing round. State s^h is the state after h steps.
using Step = std::uint32_t;

enum class BoundMode : std::uint8_t { strict, weak };
/// Whether signatures emitted in step s are usable by the adversary within s.
enum class ClosureMode : std::uint8_t { inclusive, exclusive };

std::string_view to_string(BoundMode m);
std::string_view to_string(ClosureMode m);
BoundMode bound_mode_from_string(std::string_view s);
ClosureMode closure_mode_from_string(std::string_view s);

/// Simulated wall clock. Every node builds its candidate log at the same
/// instant so correct candidates are bit-identical.
inline constexpr UnixMillis kSimNow = 1'000'000;
inline constexpr Millis kSimPeriod = 60'000;

struct FaultConfig {
  std::uint16_t n = 0;
  std::uint16_t f = 0;
  NodeSet faulty;
  BoundMode mode = BoundMode::strict;
  ProtocolParams params;
  ClosureMode closure = ClosureMode::inclusive;
  /// Explicit HO / SHO sets keyed by (step, receiver). Absent entries use
  /// the defaults HO = all nodes, SHO = all nodes minus the faulty set.
  std::map<std::pair<Step, NodeId>, NodeSet> ho_override;
  std::map<std::pair<Step, NodeId>, NodeSet> sho_override;

  Round replication_rounds() const { return params.rounds_for(f); }
  Step steps() const { return replication_rounds() + 1; }
  bool signing_step(Step s) const { return s == steps(); }

  NodeSet all() const;
  NodeSet correct() const;
  bool is_faulty(NodeId id) const { return faulty.contains(id); }
  NodeSet ho(NodeId receiver, Step s) const;
  NodeSet sho(NodeId receiver, Step s) const;
  /// C_s: nodes contained in every SHO set up to and including step s.
  NodeSet survivors(Step s) const;

  /// Throws std::invalid_argument when the configuration is not well formed.
  void validate() const;

  ReplicateContext replicate_context() const;
};

/// Keys used by every simulated run (keyed-MAC scheme, fixed seed).
std::vector<KeyPair> sim_keys(std::uint16_t n);

/// A signature embedded in a message, with the payload it claims to cover.
struct EmbeddedSig {
  NodeId signer;
  Bytes sig;
  Bytes payload;
};

std::vector<EmbeddedSig> embedded_signatures(const NodeMessage& m, const ReplicateContext& ctx);

struct LedgerRecord {
  Step step = 0;
  NodeId sender;
  NodeId receiver;
  NodeMessage msg;
};

/// Append-only record of everything correct nodes sent, with the signatures
/// extracted per signer. Faulty senders are not recorded: their signatures
/// are unrestricted anyway.
class SentLedger {
 public:
  void record(Step s, NodeId sender, NodeId receiver, const NodeMessage& msg, const ReplicateContext& ctx);

  const std::vector<LedgerRecord>& records() const { return records_; }
  /// Sigma_j(s): signatures by j embedded in messages sent during step s.
  std::set<Bytes> sigma(NodeId signer, Step s) const;
  /// True if this exact signature by `signer` was sent at some step <= up_to.
  bool contains(NodeId signer, const Bytes& sig, Step up_to) const;
  /// A signature by `signer` over `payload` sent at some step <= up_to.
  std::optional<Bytes> lookup(NodeId signer, const Bytes& payload, Step up_to) const;
  /// Every (signer, payload) pair ever observed; used to key search states.
  std::set<std::pair<NodeId, Bytes>> observed() const;

 private:
  std::vector<LedgerRecord> records_;
  std::map<NodeId, std::map<Bytes, Step>> by_sig_;
  std::map<NodeId, std::map<Bytes, std::pair<Bytes, Step>>> by_payload_;
};

/// Checks a message the adversary wants to deliver in step s: every embedded
/// signature attributed to a node in C_s must have been sent before (within
/// the closure window). Bytes that do not verify are tolerated since the
/// protocol drops them; a verifying signature that never appeared in the
/// ledger is a forgery. On failure `reason` describes the first offence.
bool closure_check(const NodeMessage& msg, Step s, const SentLedger& ledger, const FaultConfig& cfg,
                   const PublicRegistry& reg, std::string* reason = nullptr);

/// Messages the adversary delivers, keyed by (sender, receiver).
using Forgery = std::map<std::pair<NodeId, NodeId>, NodeMessage>;

/// Read-only view handed to an adversary at one step, after every node
/// computed its outbox and before delivery.
struct RoundView {
  Step step = 0;
  const FaultConfig* cfg = nullptr;
  const SentLedger* ledger = nullptr;
  const PublicRegistry* reg = nullptr;
  const std::vector<KeyPair>* keys = nullptr;
  /// Nodes before delivery; faulty entries are shadow copies running the
  /// correct protocol on the traffic they would see.
  const std::vector<Node>* nodes = nullptr;
  /// Per sender, what the (correct or shadow) node would send this step.
  const std::vector<std::map<NodeId, NodeMessage>>* outbox = nullptr;

  bool signing() const { return cfg->signing_step(step); }
  Step closure_limit() const;
  ReplicateContext context() const { return cfg->replicate_context(); }
  /// A signature the adversary may embed: faulty signers sign anything,
  /// correct ones only what the ledger already holds.
  std::optional<Bytes> signature(NodeId signer, const Bytes& payload) const;
  /// Witnessed value for thread `primary` carrying every available signature
  /// among `signers`.
  WitnessedValue witnessed(const EntrySet& value, NodeId primary, const NodeSet& signers) const;
  /// The shadow message faulty `sender` would send to `receiver`, if any.
  std::optional<NodeMessage> shadow(NodeId sender, NodeId receiver) const;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  virtual Forgery forge(const RoundView& view, std::mt19937_64& rng) = 0;
};

struct Delivery {
  NodeId sender;
  NodeMessage msg;
  bool forged = false;

  bool operator==(const Delivery&) const = default;
};

struct Trace {
  FaultConfig cfg;
  std::string adversary;
  std::uint64_t seed = 0;
  std::vector<EntrySet> inputs;
  /// states[h][i] for h = 0..steps.
  std::vector<std::vector<NodeState>> states;
  /// delivered[s-1][i]: what node i received in step s (one slot per sender).
  std::vector<std::vector<std::vector<Delivery>>> delivered;
  /// Per step, what the adversary asked to deliver.
  std::vector<Forgery> forged;
  /// Per step and sender, the correct or shadow outbox.
  std::vector<std::vector<std::map<NodeId, NodeMessage>>> outbox;
  std::vector<std::optional<LogCertificate>> certificates;
  SentLedger ledger;
  bool valid = true;
  std::string invalid_reason;

  const NodeState& final_state(NodeId i) const { return states.back().at(i.value); }
  const NodeState& initial_state(NodeId i) const { return states.front().at(i.value); }
};

/// Canonical encodings of thread and node states, for hashing and deduplication.
Bytes encode_thread_state(const ThreadState& t);
Bytes encode_state(const NodeState& s);

/// One lock-step run, advanced a step at a time. Copyable so that a search
/// can branch on adversary choices.
class LockstepRun {
 public:
  LockstepRun(FaultConfig cfg, std::vector<EntrySet> inputs, std::string adversary_name, std::uint64_t seed);

  Step next_step() const { return step_ + 1; }
  bool done() const { return step_ >= cfg_.steps(); }
  bool step_open() const { return open_; }
  bool valid() const { return trace_.valid; }

  /// Computes every outbox for the next step and records correct senders.
  void open_step();
  RoundView view() const;
  /// Validates and delivers the forgery, advancing every node.
  void close_step(const Forgery& forged);
  /// The state receiver i would reach if `forged` were delivered; does not
  /// modify the run.
  NodeState preview(NodeId receiver, const Forgery& forged) const;

  const FaultConfig& config() const { return cfg_; }
  const Trace& trace() const { return trace_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const PublicRegistry& registry() const { return *reg_; }

 private:
  std::vector<Delivery> inbox_for(NodeId receiver, const Forgery& forged) const;
  static void deliver(Node& node, bool signing, const std::vector<Delivery>& inbox);

  FaultConfig cfg_;
  std::vector<KeyPair> keys_;
  std::shared_ptr<const PublicRegistry> reg_;
  std::vector<Node> nodes_;
  std::vector<std::map<NodeId, NodeMessage>> outbox_;
  Step step_ = 0;
  bool open_ = false;
  Trace trace_;
};

Trace run_lockstep(const FaultConfig& cfg, Adversary& adversary, const std::vector<EntrySet>& inputs,
                   std::uint64_t seed);

}  // namespace logres::sim
