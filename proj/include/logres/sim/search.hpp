#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "logres/sim/model.hpp"
#include "logres/sim/properties.hpp"

namespace logres::sim {

struct SearchOptions {
  std::uint16_t n = 3;
  std::uint16_t f = 1;
  BoundMode mode = BoundMode::strict;
  ProtocolParams params;
  ClosureMode closure = ClosureMode::inclusive;
  /// Entry symbols; correct inputs range over every subset, and forged
  /// values over every subset as well.
  std::vector<std::string> domain{"a"};
  /// Maximum forged values (replication) or signatures (signing) delivered
  /// to one receiver per step. Unset means unbounded.
  std::optional<std::size_t> budget;
  /// Restrict the search to one faulty set; otherwise every set of size <= f.
  std::optional<NodeSet> faulty;
  bool stop_at_first = false;
  std::size_t keep_violations = 4;
};

struct Violation {
  Trace trace;
  std::vector<Verdict> failed;
};

struct SearchReport {
  std::uint64_t fault_sets = 0;
  std::uint64_t input_vectors = 0;
  /// Complete runs whose properties were checked.
  std::uint64_t leaves = 0;
  /// Steps executed across all branches.
  std::uint64_t expanded = 0;
  /// Branches cut because an identical global state was already explored.
  std::uint64_t memo_hits = 0;
  std::uint64_t violations = 0;
  std::vector<Violation> samples;
  double seconds = 0;
};

/// Enumerates every adversary behaviour constructible from the ledger (plus
/// arbitrary faulty signatures) for every small configuration and input
/// vector, checking the state-determined properties at each leaf:
/// agreement, completeness, liveness (strict mode) and per-thread
/// agreement/validity.
///
/// Two reductions keep this finite and exact for the implemented protocol:
/// witness sets merge across senders, so the faulty nodes' combined traffic
/// to one receiver is modelled as a single message from the lowest faulty
/// id; and within a step each thread evolves independently, so choices are
/// enumerated and deduplicated per thread before being combined.
SearchReport exhaustive_search(const SearchOptions& opts);

}  // namespace logres::sim
