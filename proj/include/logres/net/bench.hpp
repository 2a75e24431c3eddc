#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logres/net/client.hpp"
#include "logres/net/config.hpp"
#include "logres/net/service.hpp"

namespace logres::net {

double wall_ms();
void sleep_until_ms(double t);

/// Picks `count` currently free loopback TCP ports.
std::vector<std::uint16_t> free_ports(std::size_t count);

/// Deployments for an n-node loopback cluster with deterministic keys.
struct ClusterOptions {
  std::uint16_t n = 5;
  std::uint16_t f = 2;
  Millis period_ms = 1000;
  double round_ms = 100;
  double link_latency_ms = 0;
  double bandwidth_bps = 0;
  std::size_t max_entry = kDefaultMaxEntrySize;
  /// Nodes that are configured but never started.
  std::set<NodeId> crashed;
  std::set<NodeId> padding;
  /// Per-node data directories are created below this one when set.
  std::string data_root;
  /// Delay before slot 0 starts, leaving time to bring the services up.
  Millis warmup_ms = 300;
  std::uint8_t key_seed = 0x42;
};

std::vector<Deployment> make_cluster(const ClusterOptions& opts);

/// n services on one host, started together.
class LocalCluster {
 public:
  explicit LocalCluster(ClusterOptions opts);
  ~LocalCluster();

  void start();
  void stop();
  /// Restarts a stopped or crashed node with its original deployment.
  void restart(NodeId id);
  void crash(NodeId id);

  const ClusterOptions& options() const { return opts_; }
  const Deployment& deployment(NodeId id) const { return deps_.at(id.value); }
  /// Null for nodes that are not running.
  NodeService* service(NodeId id) { return services_.at(id.value).get(); }
  std::vector<NodeId> running() const;
  Endpoint endpoint(NodeId id) const;
  std::shared_ptr<const PublicRegistry> registry() const { return deps_.front().registry(); }
  const Schedule& schedule() const { return sched_; }

 private:
  ClusterOptions opts_;
  std::vector<Deployment> deps_;
  std::vector<std::unique_ptr<NodeService>> services_;
  Schedule sched_;
};

/// Random entry of the given size, deterministic in (seed, index).
Entry workload_entry(std::uint64_t seed, std::uint64_t index, std::size_t size);

struct LatencyOptions {
  std::uint16_t n = 5;
  std::uint16_t f = 2;
  NetParams net;
  /// Round lengths to try, largest first; the sweep stops at the first failure.
  std::vector<double> rounds_ms{30, 28, 26, 25, 24, 23, 22.5, 22, 21.5, 21, 20.5, 20};
  std::size_t periods = 3;
  Millis collection_ms = 150;
  /// Tries per round length before the sweep stops.
  std::size_t attempts = 2;
};

struct LatencyTrial {
  double round_ms = 0;
  bool ok = false;
  std::string detail;
  /// Mean of publication time minus scheduled replication start.
  double observed_ms = 0;
};

struct LatencyReport {
  std::uint16_t n = 0;
  std::uint16_t f = 0;
  NetParams net;
  LatencyBound bound;
  std::vector<LatencyTrial> trials;
  std::optional<double> min_round_ms;
  /// (f+2) * smallest round length that still processed every request.
  std::optional<double> latency_ms;
  std::optional<double> observed_ms;
};

/// Shrinks the round length until the one request submitted per period is
/// no longer processed by every node.
LatencyReport bench_latency(const LatencyOptions& opts);

struct ThroughputOptions {
  std::uint16_t n = 5;
  std::uint16_t f = 2;
  std::size_t entries_per_period = 1000;
  std::size_t entry_size = 1570;
  std::size_t periods = 2;
  Millis period_ms = 9000;
  double round_ms = 1500;
  double link_latency_ms = 20;
  double bandwidth_bps = 100e6;
  /// The last f nodes pad their traffic.
  bool padding = false;
  std::uint64_t seed = 1;
};

struct ThroughputReport {
  std::uint16_t n = 0;
  std::uint16_t f = 0;
  bool padding = false;
  std::size_t submitted = 0;
  /// Entries added per epoch, per published certificate at node 0.
  std::vector<std::size_t> new_entries;
  /// Entry sets of each epoch at node 0.
  std::vector<EntrySet> epoch_entries;
  bool agree = false;
  bool all_valid = false;
  std::string detail;
  double entries_per_second = 0;
  Millis period_ms = 0;
  std::uint64_t bytes_sent = 0;
};

/// Submits entries_per_period fresh entries to f+1 nodes each period and
/// reports what the cluster published.
ThroughputReport bench_throughput(const ThroughputOptions& opts);

std::string to_json(const LatencyReport& r);
std::string to_json(const ThroughputReport& r);

}  // namespace logres::net
