#include "logres/sim/search.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <unordered_set>

namespace logres::sim {

namespace {

struct Choice {
  /// Messages to one receiver.
  Forgery msgs;
  std::size_t cost = 0;
};

std::vector<EntrySet> all_subsets(const std::vector<std::string>& domain) {
  std::vector<EntrySet> out;
  const std::uint32_t limit = 1u << domain.size();
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    std::vector<Entry> es;
    for (std::size_t k = 0; k < domain.size(); ++k) {
      if (mask & (1u << k)) es.push_back(Entry::from_string(domain[k]));
    }
    out.emplace_back(std::move(es));
  }
  return out;
}

std::vector<NodeSet> subsets_of(const NodeSet& s) {
  std::vector<NodeId> items(s.begin(), s.end());
  std::vector<NodeSet> out;
  for (std::uint32_t mask = 0; mask < (1u << items.size()); ++mask) {
    NodeSet pick;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (mask & (1u << k)) pick.insert(items[k]);
    }
    out.push_back(std::move(pick));
  }
  return out;
}

/// Calls fn(index vector) for every element of the product of `sizes`.
void for_each_product(const std::vector<std::size_t>& sizes, const std::function<bool(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> idx(sizes.size(), 0);
  for (auto s : sizes) {
    if (s == 0) return;
  }
  while (true) {
    if (!fn(idx)) return;
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == sizes[k]) idx[k++] = 0;
    if (k == idx.size()) return;
  }
}

class Searcher {
 public:
  Searcher(const SearchOptions& opts, SearchReport& report)
      : opts_(opts), report_(report), values_(all_subsets(opts.domain)) {}

  void run(const FaultConfig& cfg, const std::vector<EntrySet>& inputs) {
    memo_.assign(cfg.steps() + 1, {});
    LockstepRun root(cfg, inputs, "search", 0);
    dfs(root);
  }

  bool stopped() const { return opts_.stop_at_first && report_.violations > 0; }

 private:
  void dfs(LockstepRun& run) {
    if (stopped()) return;
    if (run.done()) {
      leaf(run.trace());
      return;
    }
    run.open_step();
    const auto view = run.view();
    const auto& cfg = run.config();

    std::vector<std::vector<Choice>> per_receiver;
    for (auto i : cfg.correct()) {
      per_receiver.push_back(cfg.signing_step(view.step) ? signing_choices(run, view, i) : replication_choices(run, view, i));
    }
    std::vector<std::size_t> sizes;
    for (const auto& c : per_receiver) sizes.push_back(c.size());

    for_each_product(sizes, [&](const std::vector<std::size_t>& idx) {
      Forgery combined;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        for (const auto& [key, msg] : per_receiver[k][idx[k]].msgs) combined.emplace(key, msg);
      }
      LockstepRun next = run;
      next.close_step(combined);
      ++report_.expanded;
      if (!next.valid()) throw std::logic_error("search produced a forgery outside the closure: " + next.trace().invalid_reason);
      if (!memo_[view.step].insert(state_key(next)).second) {
        ++report_.memo_hits;
        return true;
      }
      dfs(next);
      return !stopped();
    });
  }

  std::string state_key(const LockstepRun& run) const {
    Writer w;
    for (auto i : run.config().correct()) w.raw(encode_state(run.nodes()[i.value].state()));
    for (const auto& [signer, payload] : run.trace().ledger.observed()) {
      w.u16(signer.value);
      w.bytes16(payload);
    }
    const auto d = sha256(w.data());
    return std::string(d.begin(), d.end());
  }

  /// Routes correct senders' traffic for thread p at receiver i, mirroring
  /// Node::replication_next.
  std::vector<ReplicateMsg> honest_inbox(const RoundView& v, NodeId i, NodeId p) const {
    std::vector<ReplicateMsg> out;
    const auto sho = v.cfg->sho(i, v.step);
    for (auto j : sho) {
      auto m = v.shadow(j, i);
      if (!m) continue;
      const auto& b = std::get<ReplicationBundle>(*m);
      for (const auto& msg : b.msgs) {
        if (msg.primary == p && msg.sender == b.sender) out.push_back(msg);
      }
    }
    return out;
  }

  std::vector<Choice> replication_choices(const LockstepRun& run, const RoundView& v, NodeId i) const {
    const auto& cfg = *v.cfg;
    std::vector<Choice> none{Choice{}};
    if (cfg.faulty.empty() || (opts_.budget && *opts_.budget == 0)) return none;
    const NodeId q0 = *cfg.faulty.begin();
    if (!cfg.ho(i, v.step).contains(q0) || cfg.sho(i, v.step).contains(q0)) return none;
    const auto ctx = v.context();
    const auto& node = run.nodes()[i.value];

    // Distinct outcomes per thread, each with its cheapest forged message.
    std::vector<NodeId> threads;
    std::vector<std::vector<std::pair<std::optional<ReplicateMsg>, std::size_t>>> options;
    for (std::uint16_t pv = 0; pv < cfg.n; ++pv) {
      const NodeId p{pv};
      if (p == i) continue;
      const auto& state = node.state().threads[pv];
      const auto base = honest_inbox(v, i, p);

      // Per value: absent, or a witness set containing the primary. A set
      // without the primary is either dropped or, merged with a correct
      // sender's set (which always contains it), equivalent to adding it.
      std::vector<std::vector<std::optional<WitnessedValue>>> per_value;
      for (const auto& x : values_) {
        std::vector<std::optional<WitnessedValue>> alts{std::nullopt};
        auto all = v.witnessed(x, p, cfg.all());
        if (all.witnesses.contains(p)) {
          NodeSet others;
          for (const auto& [id, sig] : all.witnesses) {
            if (id != p) others.insert(id);
          }
          for (auto& extra : subsets_of(others)) {
            WitnessedValue wv{x, p, {}};
            wv.witnesses.emplace(p, all.witnesses.at(p));
            for (auto id : extra) wv.witnesses.emplace(id, all.witnesses.at(id));
            alts.push_back(std::move(wv));
          }
        }
        per_value.push_back(std::move(alts));
      }

      std::map<Bytes, std::pair<std::optional<ReplicateMsg>, std::size_t>> distinct;
      std::vector<std::size_t> sizes;
      for (const auto& a : per_value) sizes.push_back(a.size());
      for_each_product(sizes, [&](const std::vector<std::size_t>& idx) {
        ReplicateMsg m{q0, ctx.epoch, v.step, p, {}};
        for (std::size_t k = 0; k < idx.size(); ++k) {
          if (per_value[k][idx[k]]) m.values.push_back(*per_value[k][idx[k]]);
        }
        const std::size_t cost = m.values.size();
        if (opts_.budget && cost > *opts_.budget) return true;
        auto inbox = base;
        std::optional<ReplicateMsg> forged;
        if (cost > 0) {
          inbox.push_back(m);
          forged = std::move(m);
        }
        auto next = thread_next(state, v.step, inbox, *v.reg, ctx);
        auto key = encode_thread_state(next);
        auto it = distinct.find(key);
        if (it == distinct.end() || it->second.second > cost) distinct[key] = {std::move(forged), cost};
        return true;
      });
      threads.push_back(p);
      options.emplace_back();
      for (auto& [key, opt] : distinct) options.back().push_back(std::move(opt));
    }

    std::vector<Choice> out;
    std::vector<std::size_t> sizes;
    for (const auto& o : options) sizes.push_back(o.size());
    for_each_product(sizes, [&](const std::vector<std::size_t>& idx) {
      ReplicationBundle b{q0, ctx.epoch, v.step, {}};
      std::size_t cost = 0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& [msg, c] = options[k][idx[k]];
        if (msg) b.msgs.push_back(*msg);
        cost += c;
      }
      if (opts_.budget && cost > *opts_.budget) return true;
      Choice ch;
      ch.cost = cost;
      if (!b.msgs.empty()) ch.msgs.emplace(std::make_pair(q0, i), std::move(b));
      out.push_back(std::move(ch));
      return true;
    });
    return out;
  }

  std::vector<Choice> signing_choices(const LockstepRun& run, const RoundView& v, NodeId i) const {
    const auto& cfg = *v.cfg;
    const auto& digest = run.nodes()[i.value].state().candidate_digest;
    std::map<Bytes, Choice> distinct;
    for (const auto& signers : subsets_of(cfg.faulty)) {
      if (opts_.budget && signers.size() > *opts_.budget) continue;
      Choice ch;
      ch.cost = signers.size();
      bool allowed = true;
      for (auto j : signers) {
        if (!cfg.ho(i, v.step).contains(j) || cfg.sho(i, v.step).contains(j)) allowed = false;
        auto sig = v.signature(j, log_sig_payload(*digest));
        ch.msgs.emplace(std::make_pair(j, i), LogSigMsg{j, v.context().epoch, *digest, *sig});
      }
      if (!allowed) continue;
      auto key = encode_state(run.preview(i, ch.msgs));
      distinct.try_emplace(std::move(key), std::move(ch));
    }
    std::vector<Choice> out;
    for (auto& [key, ch] : distinct) out.push_back(std::move(ch));
    return out;
  }

  void leaf(const Trace& t) {
    ++report_.leaves;
    std::vector<Verdict> verdicts;
    if (t.cfg.mode == BoundMode::strict) verdicts = check_core(t);
    verdicts.push_back(check_thread_agreement(t));
    verdicts.push_back(check_thread_validity(t));
    if (all_pass(verdicts)) return;
    ++report_.violations;
    if (report_.samples.size() < opts_.keep_violations) {
      Violation v{t, {}};
      for (auto& verdict : verdicts) {
        if (!verdict.pass) v.failed.push_back(std::move(verdict));
      }
      report_.samples.push_back(std::move(v));
    }
  }

  const SearchOptions& opts_;
  SearchReport& report_;
  std::vector<EntrySet> values_;
  std::vector<std::unordered_set<std::string>> memo_;
};

}  // namespace

SearchReport exhaustive_search(const SearchOptions& opts) {
  if (opts.n > 6) throw std::invalid_argument("exhaustive search is limited to n <= 6");
  if (opts.domain.size() > 3) throw std::invalid_argument("exhaustive search is limited to 3 entry symbols");
  const auto start = std::chrono::steady_clock::now();
  SearchReport report;
  Searcher searcher(opts, report);

  FaultConfig base;
  base.n = opts.n;
  base.f = opts.f;
  base.mode = opts.mode;
  base.params = opts.params;
  base.closure = opts.closure;

  std::vector<NodeSet> fault_sets;
  if (opts.faulty) {
    fault_sets.push_back(*opts.faulty);
  } else {
    for (auto& s : subsets_of(base.all())) {
      if (s.size() <= opts.f) fault_sets.push_back(std::move(s));
    }
  }
  const auto inputs_space = all_subsets(opts.domain);

  for (const auto& faulty : fault_sets) {
    FaultConfig cfg = base;
    cfg.faulty = faulty;
    cfg.validate();
    ++report.fault_sets;
    const auto correct = cfg.correct();
    std::vector<std::size_t> sizes(correct.size(), inputs_space.size());
    for_each_product(sizes, [&](const std::vector<std::size_t>& idx) {
      std::vector<EntrySet> inputs(cfg.n);
      std::size_t k = 0;
      for (auto c : correct) inputs[c.value] = inputs_space[idx[k++]];
      ++report.input_vectors;
      searcher.run(cfg, inputs);
      return !searcher.stopped();
    });
    if (searcher.stopped()) break;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace logres::sim
