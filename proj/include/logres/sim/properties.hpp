#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "logres/sim/model.hpp"

namespace logres::sim {

struct Verdict {
  std::string property;
  bool pass = true;
  std::string detail;
};

/// Correct nodes end with equal logs, and no log other than theirs could
/// collect f+1 signatures from correct signers in the ledger plus the
/// faulty nodes.
Verdict check_agreement(const Trace& t);
/// Every entry a correct node held after the first step is in its final log.
Verdict check_completeness(const Trace& t);
/// Every correct node ends with at least f+1 signatures.
Verdict check_liveness(const Trace& t);

/// C1: correct nodes return equal values in every thread.
Verdict check_thread_agreement(const Trace& t);
/// C2: a thread with a correct primary returns its input at every correct node.
Verdict check_thread_validity(const Trace& t);
/// A value accepted by a correct responder in round r < R is known to every
/// correct responder of that thread by the end of round r+1.
Verdict check_knowledge_propagation(const Trace& t);
/// P never shrinks, and once two values are known the decision stays empty.
Verdict check_monotonicity(const Trace& t);
/// Any value a correct node accepts in the last round carries at least R
/// witnesses, at least one of them correct when R = f+1.
Verdict check_last_round_witnesses(const Trace& t);

/// Agreement, completeness, liveness.
std::vector<Verdict> check_core(const Trace& t);
/// The properties claimed for the trace's mode: everything in strict mode,
/// the replication-level ones in weak mode.
std::vector<Verdict> check_all(const Trace& t);
bool all_pass(const std::vector<Verdict>& vs);
std::string describe_failures(const std::vector<Verdict>& vs);

/// Exhaustively checks |A| + |B| > n => A and B intersect over all subset
/// pairs of an n-element universe. Returns a counterexample pair of bit masks.
std::optional<std::pair<std::uint32_t, std::uint32_t>> overlap_counterexample(unsigned n);

}  // namespace logres::sim
