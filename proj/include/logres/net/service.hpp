#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "logres/net/config.hpp"
#include "logres/net/transport.hpp"
#include "logres/node.hpp"

namespace logres::net {

/// Position of a protocol frame or of the node: target epoch and step, where
/// step 0 is collection, 1..R are replication rounds and R+1 is signing.
struct Position {
  std::uint64_t epoch = 0;
  Round step = 0;

  auto operator<=>(const Position&) const = default;
};

enum class Admission : std::uint8_t { current, early, late, too_far };

/// Frames for the node's current step are processed, frames for a later step
/// of the same or next epoch are buffered, and anything older is late (the
/// sender is treated as not heard for that step).
Admission admit(Position frame, Position node);

/// Per-step inboxes with early-frame buffering.
class Inbox {
 public:
  /// Returns the admission verdict and keeps the frame if it is early.
  Admission offer(Position at, NodeMessage msg, Position node);
  /// Takes every frame buffered for exactly `at`.
  std::vector<NodeMessage> take(Position at);
  /// Drops everything older than `at`.
  void prune(Position at);
  std::size_t buffered() const;

 private:
  std::map<Position, std::vector<NodeMessage>> slots_;
};

/// Schedule arithmetic for slot k: collection, then f+1 replication rounds
/// and one signing round at the end of the period.
struct Schedule {
  UnixMillis start_ms = 0;
  Millis period_ms = 0;
  double round_ms = 0;
  Round rounds = 0;

  double slot_start(std::uint64_t k) const { return static_cast<double>(start_ms) + static_cast<double>(k) * static_cast<double>(period_ms); }
  double replication_start(std::uint64_t k) const { return slot_start(k + 1) - (rounds + 1) * round_ms; }
  /// End of step r (1..R+1) of slot k; the end of step R+1 is the next slot's start.
  double step_end(std::uint64_t k, Round r) const {
    return r == rounds + 1 ? slot_start(k + 1) : replication_start(k) + r * round_ms;
  }
  /// First slot whose collection window has not closed at `now_ms`.
  std::uint64_t first_joinable(double now_ms) const;
};

struct Publication {
  std::uint64_t slot = 0;
  LogCertificate cert;
  /// Scheduled start of replication and the wall time the certificate was built.
  double replication_start_ms = 0;
  double published_ms = 0;
};

struct ServiceStats {
  std::uint64_t slots = 0;
  std::uint64_t published = 0;
  std::uint64_t failed = 0;
  std::uint64_t late_frames = 0;
  std::uint64_t early_frames = 0;
  std::uint64_t bad_frames = 0;
  std::uint64_t submits = 0;
  std::uint64_t catchups = 0;
  TransportStats transport;
};

/// Runs one node on its own I/O thread. Every protocol state change happens
/// on that thread; the accessors return snapshots.
class NodeService {
 public:
  explicit NodeService(Deployment dep);
  ~NodeService();
  NodeService(const NodeService&) = delete;
  NodeService& operator=(const NodeService&) = delete;

  void start();
  void stop();

  NodeId id() const { return dep_.self; }
  const Deployment& deployment() const { return dep_; }
  std::optional<LogCertificate> latest_certificate() const;
  std::vector<Publication> publications() const;
  ServiceStats stats() const;

 private:
  void on_frame(wire::Frame frame, const Reply& reply);
  void on_submit(const Bytes& body, const Reply& reply);
  void on_peer_message(NodeMessage msg);

  void schedule(double at_ms, std::function<void()> fn);
  void slot_begin(std::uint64_t k);
  void replication_begin(std::uint64_t k);
  void step_end(std::uint64_t k, Round r);
  void send_round(Round r);
  void broadcast(const Bytes& frame);
  Position position() const;
  void drain(Position at);

  void request_certificates();
  void consider(const LogCertificate& cert);
  void load_state();
  void persist();

  Deployment dep_;
  Schedule sched_;
  asio::io_context io_;
  std::unique_ptr<asio::system_timer> timer_;
  std::unique_ptr<Transport> transport_;
  std::unique_ptr<Node> node_;
  std::thread thread_;
  bool started_ = false;

  Inbox inbox_;
  Round step_ = 0;
  std::vector<ReplicationBundle> bundles_;
  std::vector<LogSigMsg> sigs_;
  /// Submissions received outside the collection window.
  std::vector<Entry> queued_;
  std::set<Bytes> queued_keys_;
  bool behind_ = true;
  std::optional<LogCertificate> adoptable_;
  double replication_start_ms_ = 0;

  mutable std::mutex mu_;
  std::optional<LogCertificate> latest_;
  std::vector<Publication> publications_;
  ServiceStats stats_;
};

}  // namespace logres::net
