#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logres/sim/model.hpp"
#include "logres/sim/properties.hpp"
#include "logres/sim/search.hpp"

namespace logres::sim {

/// Campaign description, read from a key-value text file:
///
///   # comment
///   n = 5
///   f = 2
///   faulty = 3,4          (optional; drawn per run otherwise)
///   mode = strict         (strict | weak)
///   adversary = equivocation
///   seed = 1
///   runs = 100
///   rounds = 0            (0 means f+1)
///   closure = inclusive   (inclusive | exclusive)
///   binding = bound       (bound | unbound)
///   early_return = false
///   domain = a,b          (search only)
///   budget = 2            (search only)
struct CampaignConfig {
  std::uint16_t n = 5;
  std::uint16_t f = 2;
  std::optional<NodeSet> faulty;
  BoundMode mode = BoundMode::strict;
  std::string adversary = "none";
  std::uint64_t seed = 1;
  std::uint64_t runs = 1;
  Round rounds = 0;
  ClosureMode closure = ClosureMode::inclusive;
  VoteBinding binding = VoteBinding::primary_bound;
  bool early_return = false;
  std::vector<std::string> domain{"a"};
  std::optional<std::size_t> budget;

  ProtocolParams params() const;
};

/// Throws std::invalid_argument naming the offending line.
CampaignConfig parse_campaign(std::string_view text);
/// Applies one `key = value` setting (also used for command-line overrides).
void apply_setting(CampaignConfig& cfg, std::string_view key, std::string_view value);

struct CampaignReport {
  std::string adversary;
  std::uint64_t runs = 0;
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::uint64_t invalid = 0;
  std::map<std::string, std::uint64_t> failures_by_property;
  std::optional<Trace> first_failure;
  double seconds = 0;
};

/// Runs `runs` seeded scenarios (seed, seed+1, ...) and checks every
/// property claimed for the configured mode.
CampaignReport run_campaign(const CampaignConfig& cfg);
SearchOptions search_options(const CampaignConfig& cfg);

/// Line-oriented dump: run header, inputs, adversary messages (as hex
/// frames, so the run can be replayed), one `msg` record per delivered
/// message hash, per-step state digests and final certificates.
std::string dump_trace(const Trace& t);

struct ReplayResult {
  bool matches = false;
  std::string replayed;
  Trace trace;
};

/// Re-runs a dumped trace with its recorded adversary messages and compares
/// the regenerated dump with the original byte for byte.
ReplayResult replay_trace(std::string_view dump);

}  // namespace logres::sim
