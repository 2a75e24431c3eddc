#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <boost/asio.hpp>

#include "logres/wire.hpp"

namespace logres::net {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

/// Outbound link emulation: every frame waits for the link to be free, takes
/// size * 8 / bandwidth to serialize, then latency to arrive.
struct LinkParams {
  double latency_ms = 0;
  /// 0 means unlimited.
  double bandwidth_bps = 0;
};

/// Sends a frame back on the connection a request arrived on.
using Reply = std::function<void(Bytes frame)>;
using FrameHandler = std::function<void(wire::Frame frame, const Reply& reply)>;

struct TransportStats {
  std::uint64_t frames_in = 0;
  std::uint64_t frames_out = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t bad_frames = 0;
  std::uint64_t dropped_out = 0;
};

class Link;
class Session;

/// Length-prefixed frames over persistent TCP connections. Single-threaded:
/// every call and callback runs on the owning io_context.
class Transport {
 public:
  Transport(asio::io_context& io, const std::string& host, std::uint16_t port, LinkParams link);
  ~Transport();
  Transport(const Transport&) = delete;
  Transport& operator=(const Transport&) = delete;

  void add_peer(NodeId id, const std::string& host, std::uint16_t port);
  void start(FrameHandler handler);
  /// Queues a complete frame for `to`. Unreachable peers silently lose it.
  void send(NodeId to, Bytes frame);
  void stop();

  std::uint16_t port() const;
  const TransportStats& stats() const { return *stats_; }

 private:
  void accept();

  asio::io_context& io_;
  tcp::acceptor acceptor_;
  LinkParams link_;
  FrameHandler handler_;
  std::map<NodeId, std::shared_ptr<Link>> links_;
  std::vector<std::weak_ptr<Session>> sessions_;
  std::shared_ptr<TransportStats> stats_;
  bool stopped_ = false;
};

}  // namespace logres::net
