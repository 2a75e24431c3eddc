#include "logres/sim/properties.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <sstream>

namespace logres::sim {

namespace {

std::optional<Verdict> incomplete(const Trace& t, const std::string& property) {
  if (!t.valid) return Verdict{property, false, "trace invalid: " + t.invalid_reason};
  if (t.states.size() != t.cfg.steps() + 1u) return Verdict{property, false, "trace incomplete"};
  return std::nullopt;
}

std::string ids(const NodeSet& s) {
  std::string out;
  for (auto id : s) out += (out.empty() ? "" : ",") + to_string(id);
  return out;
}

std::string show(const EntrySet& x) {
  std::string out = "{";
  bool first = true;
  for (const auto& e : x) {
    out += first ? "" : ",";
    out.append(e.bytes().begin(), e.bytes().end());
    first = false;
  }
  return out + "}";
}

}  // namespace

Verdict check_agreement(const Trace& t) {
  if (auto v = incomplete(t, "agreement")) return *v;
  const auto correct = t.cfg.correct();
  if (correct.empty()) return Verdict{"agreement", true, "no correct nodes"};
  const NodeId first = *correct.begin();
  const Log& agreed = t.final_state(first).log;
  for (auto i : correct) {
    if (t.final_state(i).log != agreed) {
      return Verdict{"agreement", false,
                     "node " + to_string(i) + " ended with a log different from node " + to_string(first)};
    }
  }

  // Signers per digest among correct nodes, as recorded in the ledger.
  std::map<Digest, NodeSet> signers;
  for (const auto& r : t.ledger.records()) {
    if (const auto* m = std::get_if<LogSigMsg>(&r.msg)) signers[m->digest].insert(m->sender);
  }
  const std::size_t quorum = std::size_t(t.cfg.f) + 1;
  std::vector<Digest> certifiable;
  for (const auto& [d, who] : signers) {
    if (who.size() + t.cfg.faulty.size() >= quorum) certifiable.push_back(d);
  }
  if (agreed.epoch > t.initial_state(first).log.epoch) {
    const auto d = mk_digest(agreed);
    for (const auto& c : certifiable) {
      if (c != d) return Verdict{"agreement", false, "a conflicting log digest " + to_hex(c) + " can reach f+1 signatures"};
    }
  } else if (certifiable.size() > 1) {
    return Verdict{"agreement", false, "two distinct logs can reach f+1 signatures"};
  }
  return Verdict{"agreement", true, ""};
}

Verdict check_completeness(const Trace& t) {
  if (auto v = incomplete(t, "completeness")) return *v;
  for (auto i : t.cfg.correct()) {
    const auto& held = t.states.at(1).at(i.value).entries;
    const auto& logged = t.final_state(i).log.entries;
    if (!logged.includes(held)) {
      return Verdict{"completeness", false,
                     "node " + to_string(i) + " lost entries " + show(held.minus(logged))};
    }
  }
  return Verdict{"completeness", true, ""};
}

Verdict check_liveness(const Trace& t) {
  if (auto v = incomplete(t, "liveness")) return *v;
  for (auto i : t.cfg.correct()) {
    const auto have = t.final_state(i).sigs.size();
    if (have < std::size_t(t.cfg.f) + 1) {
      return Verdict{"liveness", false,
                     "node " + to_string(i) + " holds " + std::to_string(have) + " < f+1 signatures"};
    }
  }
  return Verdict{"liveness", true, ""};
}

Verdict check_thread_agreement(const Trace& t) {
  if (auto v = incomplete(t, "thread-agreement")) return *v;
  const auto& after = t.states.at(t.cfg.replication_rounds());
  const auto correct = t.cfg.correct();
  if (correct.empty()) return Verdict{"thread-agreement", true, ""};
  const auto& ref = after.at(correct.begin()->value).decided;
  for (auto i : correct) {
    const auto& mine = after.at(i.value).decided;
    if (mine.size() != t.cfg.n) return Verdict{"thread-agreement", false, "node " + to_string(i) + " has no decision vector"};
    for (std::uint16_t p = 0; p < t.cfg.n; ++p) {
      if (mine[p] != ref[p]) {
        return Verdict{"thread-agreement", false,
                       "thread " + std::to_string(p) + ": node " + to_string(i) + " returned " + show(mine[p]) +
                           ", node " + to_string(*correct.begin()) + " returned " + show(ref[p])};
      }
    }
  }
  return Verdict{"thread-agreement", true, ""};
}

Verdict check_thread_validity(const Trace& t) {
  if (auto v = incomplete(t, "thread-validity")) return *v;
  const auto& after = t.states.at(t.cfg.replication_rounds());
  const auto correct = t.cfg.correct();
  for (auto p : correct) {
    const auto& input = t.initial_state(p).entries;
    for (auto i : correct) {
      const auto& mine = after.at(i.value).decided;
      if (mine.size() != t.cfg.n || mine[p.value] != input) {
        return Verdict{"thread-validity", false,
                       "node " + to_string(i) + " did not return correct primary " + to_string(p) + "'s input"};
      }
    }
  }
  return Verdict{"thread-validity", true, ""};
}

Verdict check_knowledge_propagation(const Trace& t) {
  if (auto v = incomplete(t, "knowledge-propagation")) return *v;
  const Round R = t.cfg.replication_rounds();
  NodeSet live;
  const auto survivors = t.cfg.survivors(t.cfg.steps());
  for (auto i : t.cfg.correct()) {
    if (survivors.contains(i)) live.insert(i);
  }
  for (std::uint16_t p = 0; p < t.cfg.n; ++p) {
    for (Round r = 1; r < R; ++r) {
      for (auto i : live) {
        if (i.value == p) continue;
        for (const auto& wv : t.states[r][i.value].threads[p].round_votes) {
          for (auto k : t.cfg.correct()) {
            if (k.value == p) continue;
            if (!t.states[r + 1][k.value].threads[p].witnessed.contains(wv.value)) {
              return Verdict{"knowledge-propagation", false,
                             "thread " + std::to_string(p) + ": node " + to_string(i) + " accepted " + show(wv.value) +
                                 " in round " + std::to_string(r) + " but node " + to_string(k) + " lacks it in round " +
                                 std::to_string(r + 1)};
            }
          }
        }
      }
    }
  }
  return Verdict{"knowledge-propagation", true, ""};
}

Verdict check_monotonicity(const Trace& t) {
  if (auto v = incomplete(t, "monotonicity")) return *v;
  const Round R = t.cfg.replication_rounds();
  for (auto i : t.cfg.correct()) {
    for (std::uint16_t p = 0; p < t.cfg.n; ++p) {
      if (i.value == p) continue;
      bool emptied = false;
      for (Round h = 0; h <= R; ++h) {
        const auto& th = t.states[h][i.value].threads[p];
        if (h > 0) {
          const auto& prev = t.states[h - 1][i.value].threads[p].witnessed;
          if (!std::includes(th.witnessed.begin(), th.witnessed.end(), prev.begin(), prev.end())) {
            return Verdict{"monotonicity", false, "P shrank at node " + to_string(i) + ", thread " + std::to_string(p)};
          }
        }
        if (!th.decision.empty() && !th.witnessed.contains(th.decision)) {
          return Verdict{"monotonicity", false, "decision outside P at node " + to_string(i)};
        }
        if (th.witnessed.size() >= 2) emptied = true;
        if (emptied && !th.decision.empty()) {
          return Verdict{"monotonicity", false,
                         "decision non-empty after two values at node " + to_string(i) + ", thread " + std::to_string(p)};
        }
      }
    }
  }
  return Verdict{"monotonicity", true, ""};
}

Verdict check_last_round_witnesses(const Trace& t) {
  if (auto v = incomplete(t, "last-round-witnesses")) return *v;
  const Round R = t.cfg.replication_rounds();
  const auto correct = t.cfg.correct();
  for (auto i : correct) {
    for (std::uint16_t p = 0; p < t.cfg.n; ++p) {
      for (const auto& wv : t.states[R][i.value].threads[p].round_votes) {
        const auto w = wv.witness_ids();
        if (w.size() < R) {
          return Verdict{"last-round-witnesses", false, "value accepted with " + std::to_string(w.size()) + " witnesses"};
        }
        const bool has_correct = std::any_of(w.begin(), w.end(), [&](NodeId id) { return correct.contains(id); });
        if (R >= Round(t.cfg.f) + 1 && !has_correct) {
          return Verdict{"last-round-witnesses", false,
                         "node " + to_string(i) + " accepted a last-round value witnessed only by {" + ids(w) + "}"};
        }
      }
    }
  }
  return Verdict{"last-round-witnesses", true, ""};
}

std::vector<Verdict> check_core(const Trace& t) {
  return {check_agreement(t), check_completeness(t), check_liveness(t)};
}

std::vector<Verdict> check_all(const Trace& t) {
  std::vector<Verdict> out;
  if (t.cfg.mode == BoundMode::strict) out = check_core(t);
  out.push_back(check_thread_agreement(t));
  out.push_back(check_thread_validity(t));
  out.push_back(check_knowledge_propagation(t));
  out.push_back(check_monotonicity(t));
  out.push_back(check_last_round_witnesses(t));
  return out;
}

bool all_pass(const std::vector<Verdict>& vs) {
  return std::all_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.pass; });
}

std::string describe_failures(const std::vector<Verdict>& vs) {
  std::ostringstream out;
  for (const auto& v : vs) {
    if (!v.pass) out << v.property << ": " << v.detail << "\n";
  }
  return out.str();
}

std::optional<std::pair<std::uint32_t, std::uint32_t>> overlap_counterexample(unsigned n) {
  if (n > 15) throw std::invalid_argument("universe too large for exhaustive check");
  const std::uint32_t limit = 1u << n;
  for (std::uint32_t a = 0; a < limit; ++a) {
    for (std::uint32_t b = 0; b < limit; ++b) {
      if (unsigned(std::popcount(a) + std::popcount(b)) > n && (a & b) == 0) return std::make_pair(a, b);
    }
  }
  return std::nullopt;
}

}  // namespace logres::sim
