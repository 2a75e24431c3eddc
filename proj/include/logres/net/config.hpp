#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "logres/crypto.hpp"
#include "logres/log.hpp"

namespace logres::net {

struct Peer {
  NodeId id;
  std::string host;
  std::uint16_t port = 0;
  Bytes public_key;
};

/// Faulty behaviours a node can be configured to exhibit.
enum class ByzantineMode : std::uint8_t {
  none,
  /// From round 2 on, adds self-signed junk values to its own thread. They
  /// are rejected for lack of witnesses but still cost bandwidth.
  padding,
};

std::string_view to_string(ByzantineMode m);
ByzantineMode byzantine_from_string(std::string_view s);

/// One node's view of the deployment. Text form, one `key = value` per line:
///
///   self = 0
///   f = 1
///   period_ms = 60000
///   round_ms = 1000
///   max_entry = 4096
///   data_dir = /var/lib/logres
///   start_ms = 0
///   secret_key = <hex>
///   node = 0 127.0.0.1:7000 <pubkey hex>      (one line per node)
///   link_latency_ms = 0
///   bandwidth_bps = 0                         (0 = unlimited)
///   byzantine = none
struct Deployment {
  std::vector<Peer> nodes;
  NodeId self;
  std::uint16_t f = 0;
  Millis period_ms = 60'000;
  double round_ms = 1000;
  std::size_t max_entry = kDefaultMaxEntrySize;
  std::string data_dir;
  /// Origin of the epoch schedule: epoch slot k starts at start_ms + k * period_ms.
  UnixMillis start_ms = 0;
  Bytes secret_key;
  Scheme scheme = Scheme::ed25519;
  /// Outbound link emulation.
  double link_latency_ms = 0;
  double bandwidth_bps = 0;
  ByzantineMode byzantine = ByzantineMode::none;
  std::size_t padding_values = 4;

  std::uint16_t n() const { return static_cast<std::uint16_t>(nodes.size()); }
  const Peer& peer(NodeId id) const;
  KeyPair key() const;
  std::shared_ptr<const PublicRegistry> registry() const;
  /// Time from the start of replication to publication: (f+2) rounds.
  double protocol_ms() const { return (static_cast<double>(f) + 2) * round_ms; }

  /// Throws std::invalid_argument.
  void validate() const;
};

Deployment parse_deployment(std::string_view text);
/// Reads a config file; LOGRES_DATA_DIR, when set, overrides data_dir.
Deployment load_deployment(const std::string& path);
std::string format_deployment(const Deployment& d);

/// "host:port"
std::pair<std::string, std::uint16_t> parse_address(std::string_view s);

struct NetParams {
  double link_latency_ms = 20;
  double bandwidth_bps = 100e6;
  std::size_t entry_size = 1570;
};

/// Per-round constant measured for the original prototype under the default
/// NetParams; slightly above latency plus serialization time.
inline constexpr double kReferenceRoundMs = 20.17;

struct LatencyBound {
  /// link latency + entry_size * 8 / bandwidth
  double round_ms = 0;
  /// (f+2) * round_ms
  double total_ms = 0;
  /// (f+2) * kReferenceRoundMs
  double reference_total_ms = 0;
};

LatencyBound lower_bound_latency(std::uint16_t f, const NetParams& p);

}  // namespace logres::net
