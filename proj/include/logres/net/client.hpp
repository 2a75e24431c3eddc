#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "logres/log.hpp"
#include "logres/wire.hpp"

namespace logres::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

Endpoint parse_endpoint(std::string_view s);
std::string to_string(const Endpoint& e);

/// Blocking client calls. Network failures and timeouts throw
/// std::runtime_error.
class Client {
 public:
  explicit Client(std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) : timeout_(timeout) {}

  /// Sends the entry to every node; one status per node, empty where the
  /// node could not be reached.
  std::vector<std::optional<wire::SubmitStatus>> submit(const Entry& entry, const std::vector<Endpoint>& nodes) const;
  /// Pipelines many entries over one connection to a single node.
  std::vector<wire::SubmitStatus> submit_batch(const std::vector<Entry>& entries, const Endpoint& node) const;
  /// The node's most recently published certificate, if any.
  std::optional<LogCertificate> get_certificate(const Endpoint& node) const;

 private:
  std::chrono::milliseconds timeout_;
};

}  // namespace logres::net
