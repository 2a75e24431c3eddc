#include "logres/sim/campaign.hpp"

#include <chrono>
#include <charconv>
#include <sstream>

#include "logres/sim/attacks.hpp"
#include "logres/wire.hpp"

namespace logres::sim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_uint(std::string_view s, std::string_view what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("bad " + std::string(what) + ": " + std::string(s));
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

NodeSet parse_ids(std::string_view s) {
  NodeSet out;
  s = trim(s);
  if (s.empty() || s == "-") return out;
  for (auto part : split(s, ',')) out.insert(NodeId{parse_uint<std::uint16_t>(part, "node id")});
  return out;
}

std::string format_ids(const NodeSet& s) {
  if (s.empty()) return "-";
  std::string out;
  for (auto id : s) out += (out.empty() ? "" : ",") + std::to_string(id.value);
  return out;
}

bool parse_bool(std::string_view s) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw std::invalid_argument("bad boolean: " + std::string(s));
}

std::string hash16(ByteView data) {
  auto d = sha256(data);
  return to_hex(ByteView(d.data(), 8));
}

}  // namespace

ProtocolParams CampaignConfig::params() const {
  ProtocolParams p;
  p.replication_rounds = rounds;
  p.binding = binding;
  p.early_return = early_return;
  return p;
}

void apply_setting(CampaignConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "n") cfg.n = parse_uint<std::uint16_t>(value, key);
  else if (key == "f") cfg.f = parse_uint<std::uint16_t>(value, key);
  else if (key == "faulty") cfg.faulty = parse_ids(value);
  else if (key == "mode") cfg.mode = bound_mode_from_string(value);
  else if (key == "adversary") cfg.adversary = std::string(value);
  else if (key == "seed") cfg.seed = parse_uint<std::uint64_t>(value, key);
  else if (key == "runs") cfg.runs = parse_uint<std::uint64_t>(value, key);
  else if (key == "rounds") cfg.rounds = parse_uint<Round>(value, key);
  else if (key == "closure") cfg.closure = closure_mode_from_string(value);
  else if (key == "binding") {
    if (value == "bound") cfg.binding = VoteBinding::primary_bound;
    else if (value == "unbound") cfg.binding = VoteBinding::unbound;
    else throw std::invalid_argument("bad binding: " + std::string(value));
  } else if (key == "early_return") cfg.early_return = parse_bool(value);
  else if (key == "domain") {
    cfg.domain.clear();
    for (auto part : split(value, ',')) {
      if (part.empty()) throw std::invalid_argument("empty domain symbol");
      cfg.domain.emplace_back(part);
    }
  } else if (key == "budget") {
    if (value == "none" || value == "-") cfg.budget.reset();
    else cfg.budget = parse_uint<std::size_t>(value, key);
  } else {
    throw std::invalid_argument("unknown key: " + std::string(key));
  }
}

CampaignConfig parse_campaign(std::string_view text) {
  CampaignConfig cfg;
  std::size_t lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

CampaignReport run_campaign(const CampaignConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  CampaignReport report;
  report.adversary = cfg.adversary;
  ScenarioOptions opts;
  opts.params = cfg.params();
  opts.closure = cfg.closure;
  opts.mode = cfg.mode;
  opts.faulty = cfg.faulty;
  for (std::uint64_t k = 0; k < cfg.runs; ++k) {
    auto scenario = make_scenario(cfg.adversary, cfg.n, cfg.f, cfg.seed + k, opts);
    auto trace = run_scenario(scenario);
    ++report.runs;
    if (!trace.valid) {
      ++report.invalid;
      if (!report.first_failure) report.first_failure = std::move(trace);
      continue;
    }
    auto verdicts = check_all(trace);
    if (all_pass(verdicts)) {
      ++report.passed;
      continue;
    }
    ++report.failed;
    for (const auto& v : verdicts) {
      if (!v.pass) ++report.failures_by_property[v.property];
    }
    if (!report.first_failure) report.first_failure = std::move(trace);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SearchOptions search_options(const CampaignConfig& cfg) {
  SearchOptions o;
  o.n = cfg.n;
  o.f = cfg.f;
  o.mode = cfg.mode;
  o.params = cfg.params();
  o.closure = cfg.closure;
  o.domain = cfg.domain;
  o.budget = cfg.budget;
  o.faulty = cfg.faulty;
  return o;
}

std::string dump_trace(const Trace& t) {
  std::ostringstream out;
  const auto& cfg = t.cfg;
  out << "logres-trace 1\n";
  out << "n " << cfg.n << "\n";
  out << "f " << cfg.f << "\n";
  out << "faulty " << format_ids(cfg.faulty) << "\n";
  out << "mode " << to_string(cfg.mode) << "\n";
  out << "rounds " << cfg.replication_rounds() << "\n";
  out << "binding " << (cfg.params.binding == VoteBinding::primary_bound ? "bound" : "unbound") << "\n";
  out << "early_return " << (cfg.params.early_return ? 1 : 0) << "\n";
  out << "closure " << to_string(cfg.closure) << "\n";
  out << "adversary " << t.adversary << "\n";
  out << "seed " << t.seed << "\n";
  for (const auto& [key, set] : cfg.ho_override) out << "ho " << key.first << " " << key.second.value << " " << format_ids(set) << "\n";
  for (const auto& [key, set] : cfg.sho_override) out << "sho " << key.first << " " << key.second.value << " " << format_ids(set) << "\n";
  for (std::size_t i = 0; i < t.inputs.size(); ++i) {
    out << "input " << i << " ";
    if (t.inputs[i].empty()) out << "-";
    bool first = true;
    for (const auto& e : t.inputs[i]) {
      out << (first ? "" : ",") << to_hex(e.bytes());
      first = false;
    }
    out << "\n";
  }
  for (std::size_t s = 0; s < t.forged.size(); ++s) {
    for (const auto& [key, msg] : t.forged[s]) {
      out << "forge " << s + 1 << " " << key.first.value << " " << key.second.value << " "
          << to_hex(wire::encode_message(msg)) << "\n";
    }
  }
  for (std::size_t s = 0; s < t.delivered.size(); ++s) {
    for (std::size_t i = 0; i < t.delivered[s].size(); ++i) {
      for (const auto& d : t.delivered[s][i]) {
        out << "msg " << s + 1 << " " << d.sender.value << " " << i << " " << hash16(wire::encode_message(d.msg)) << " "
            << (d.forged ? "forged" : "prescribed") << "\n";
      }
    }
  }
  for (std::size_t h = 0; h < t.states.size(); ++h) {
    for (std::size_t i = 0; i < t.states[h].size(); ++i) {
      out << "state " << h << " " << i << " " << hash16(encode_state(t.states[h][i])) << "\n";
    }
  }
  for (std::size_t i = 0; i < t.certificates.size(); ++i) {
    const auto& c = t.certificates[i];
    out << "cert " << i << " " << (c ? hash16(encode_certificate(*c)) : "-") << " " << (c ? c->sigs.size() : 0) << "\n";
  }
  out << "valid " << (t.valid ? 1 : 0);
  if (!t.valid) out << " " << t.invalid_reason;
  out << "\nend\n";
  return out.str();
}

ReplayResult replay_trace(std::string_view dump) {
  FaultConfig cfg;
  std::string adversary;
  std::uint64_t seed = 0;
  std::vector<EntrySet> inputs;
  std::map<Step, Forgery> script;
  bool header = false;
  std::size_t lineno = 0;
  for (auto line : split(dump, '\n')) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, ' ');
    const auto& k = fields[0];
    auto need = [&](std::size_t count) {
      if (fields.size() < count) throw std::invalid_argument("trace line " + std::to_string(lineno) + ": too few fields");
    };
    try {
      if (k == "logres-trace") {
        need(2);
        if (fields[1] != "1") throw std::invalid_argument("unsupported trace version");
        header = true;
      } else if (k == "n") {
        need(2);
        cfg.n = parse_uint<std::uint16_t>(fields[1], "n");
        inputs.assign(cfg.n, EntrySet{});
      } else if (k == "f") {
        need(2);
        cfg.f = parse_uint<std::uint16_t>(fields[1], "f");
      } else if (k == "faulty") {
        need(2);
        cfg.faulty = parse_ids(fields[1]);
      } else if (k == "mode") {
        need(2);
        cfg.mode = bound_mode_from_string(fields[1]);
      } else if (k == "rounds") {
        need(2);
        cfg.params.replication_rounds = parse_uint<Round>(fields[1], "rounds");
      } else if (k == "binding") {
        need(2);
        cfg.params.binding = fields[1] == "unbound" ? VoteBinding::unbound : VoteBinding::primary_bound;
      } else if (k == "early_return") {
        need(2);
        cfg.params.early_return = parse_bool(fields[1]);
      } else if (k == "closure") {
        need(2);
        cfg.closure = closure_mode_from_string(fields[1]);
      } else if (k == "adversary") {
        need(2);
        adversary = std::string(fields[1]);
      } else if (k == "seed") {
        need(2);
        seed = parse_uint<std::uint64_t>(fields[1], "seed");
      } else if (k == "ho" || k == "sho") {
        need(4);
        auto key = std::make_pair(parse_uint<Step>(fields[1], "step"), NodeId{parse_uint<std::uint16_t>(fields[2], "node")});
        (k == "ho" ? cfg.ho_override : cfg.sho_override)[key] = parse_ids(fields[3]);
      } else if (k == "input") {
        need(3);
        auto i = parse_uint<std::uint16_t>(fields[1], "node");
        if (i >= inputs.size()) throw std::invalid_argument("input for unknown node");
        if (fields[2] != "-") {
          for (auto hex : split(fields[2], ',')) inputs[i].insert(Entry(from_hex(hex)));
        }
      } else if (k == "forge") {
        need(5);
        auto s = parse_uint<Step>(fields[1], "step");
        NodeId from{parse_uint<std::uint16_t>(fields[2], "sender")};
        NodeId to{parse_uint<std::uint16_t>(fields[3], "receiver")};
        auto frame = from_hex(fields[4]);
        script[s][{from, to}] = wire::decode_message(wire::decode_frame(frame));
      }
      // msg, state, cert, valid and end lines are outputs, regenerated below.
    } catch (const DecodeError& e) {
      throw std::invalid_argument("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header) throw std::invalid_argument("not a logres trace");

  std::vector<Forgery> steps(cfg.steps());
  for (auto& [s, fg] : script) {
    if (s < 1 || s > steps.size()) throw std::invalid_argument("forge record for step out of range");
    steps[s - 1] = std::move(fg);
  }
  ScriptedAdversary adv(adversary, std::move(steps));
  ReplayResult result;
  result.trace = run_lockstep(cfg, adv, inputs, seed);
  result.replayed = dump_trace(result.trace);
  result.matches = result.replayed == dump;
  return result;
}

}  // namespace logres::sim
