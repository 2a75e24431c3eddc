#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "logres/net/bench.hpp"
#include "logres/net/client.hpp"
#include "logres/net/config.hpp"
#include "logres/net/service.hpp"
#include "logres/sim/campaign.hpp"

using namespace logres;
using json = nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string status_name(wire::SubmitStatus s) {
  switch (s) {
    case wire::SubmitStatus::accepted: return "accepted";
    case wire::SubmitStatus::duplicate: return "duplicate";
    case wire::SubmitStatus::oversized: return "oversized";
    case wire::SubmitStatus::rejected: return "rejected";
  }
  return "unknown";
}

std::vector<net::Endpoint> parse_endpoints(const std::vector<std::string>& list) {
  std::vector<net::Endpoint> out;
  for (const auto& s : list) out.push_back(net::parse_endpoint(s));
  return out;
}

json certificate_json(const LogCertificate& c) {
  json sigs = json::array();
  for (const auto& s : c.sigs) sigs.push_back(s.signer.value);
  json entries = json::array();
  for (const auto& e : c.log.entries) entries.push_back(to_hex(e.bytes()));
  return {{"epoch", c.log.epoch},
          {"expiration", c.log.expiration},
          {"prev_digest", to_hex(c.log.prev_digest)},
          {"digest", to_hex(mk_digest(c.log))},
          {"entries", entries},
          {"signers", sigs}};
}

json campaign_json(const sim::CampaignReport& r) {
  return {{"adversary", r.adversary}, {"runs", r.runs},     {"passed", r.passed},
          {"failed", r.failed},       {"invalid", r.invalid}, {"failures_by_property", r.failures_by_property},
          {"seconds", r.seconds}};
}

sim::CampaignConfig load_campaign(const std::string& file, const std::vector<std::string>& overrides) {
  sim::CampaignConfig cfg = file.empty() ? sim::CampaignConfig{} : sim::parse_campaign(read_file(file));
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override must be key=value: " + kv);
    sim::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

struct KeygenArgs {
  std::uint16_t n = 4;
  std::uint16_t f = 1;
  std::string host = "127.0.0.1";
  std::uint16_t base_port = 7000;
  std::string out_dir = ".";
  Millis period_ms = 60'000;
  double round_ms = 1000;
  std::size_t max_entry = kDefaultMaxEntrySize;
  UnixMillis start_ms = 0;
  std::string data_root;
};

int run_keygen(const KeygenArgs& a) {
  const auto seed = random_seed();
  std::vector<KeyPair> keys;
  std::vector<net::Peer> peers;
  for (std::uint16_t i = 0; i < a.n; ++i) {
    keys.push_back(keygen(seed, NodeId{i}, Scheme::ed25519));
    peers.push_back(net::Peer{NodeId{i}, a.host, static_cast<std::uint16_t>(a.base_port + i), keys.back().public_key});
  }
  std::filesystem::create_directories(a.out_dir);
  for (std::uint16_t i = 0; i < a.n; ++i) {
    net::Deployment d;
    d.nodes = peers;
    d.self = NodeId{i};
    d.f = a.f;
    d.period_ms = a.period_ms;
    d.round_ms = a.round_ms;
    d.max_entry = a.max_entry;
    d.start_ms = a.start_ms;
    d.secret_key = keys[i].secret;
    if (!a.data_root.empty()) d.data_dir = (std::filesystem::path(a.data_root) / ("node-" + std::to_string(i))).string();
    d.validate();
    const auto path = std::filesystem::path(a.out_dir) / ("node-" + std::to_string(i) + ".conf");
    write_file(path.string(), net::format_deployment(d));
    std::filesystem::permissions(path, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write,
                                 std::filesystem::perm_options::replace);
    std::cout << path.string() << "\n";
  }
  return 0;
}

int run_node(const std::string& config) {
  auto dep = net::load_deployment(config);
  net::NodeService svc(dep);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  svc.start();
  std::cerr << "node " << dep.self.value << " listening on " << dep.peer(dep.self).host << ":" << dep.peer(dep.self).port << "\n";
  std::size_t reported = 0;
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    const auto pubs = svc.publications();
    for (; reported < pubs.size(); ++reported) {
      const auto& p = pubs[reported];
      std::cout << "slot " << p.slot << " epoch " << p.cert.log.epoch << " entries " << p.cert.log.entries.size()
                << " sigs " << p.cert.sigs.size() << std::endl;
    }
  }
  svc.stop();
  const auto s = svc.stats();
  std::cerr << "stopped: slots " << s.slots << " published " << s.published << " failed " << s.failed << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logres log replication: nodes, client, benchmarks and simulator"};
  app.require_subcommand(1);

  KeygenArgs kg;
  auto* keygen_cmd = app.add_subcommand("keygen", "Generate keys and one config file per node");
  keygen_cmd->add_option("-n,--nodes", kg.n, "Number of nodes")->check(CLI::Range(1, 1000));
  keygen_cmd->add_option("-f,--faults", kg.f, "Tolerated byzantine nodes");
  keygen_cmd->add_option("--host", kg.host, "Host for every node");
  keygen_cmd->add_option("--base-port", kg.base_port, "Port of node 0; node i uses base+i");
  keygen_cmd->add_option("--period-ms", kg.period_ms, "Epoch period");
  keygen_cmd->add_option("--round-ms", kg.round_ms, "Round length");
  keygen_cmd->add_option("--max-entry", kg.max_entry, "Largest accepted entry in bytes");
  keygen_cmd->add_option("--start-ms", kg.start_ms, "Schedule origin (unix ms)");
  keygen_cmd->add_option("--data-root", kg.data_root, "Per-node data directories are created below this");
  keygen_cmd->add_option("-o,--out-dir", kg.out_dir, "Output directory");

  auto* node_cmd = app.add_subcommand("node", "Run a replica");
  node_cmd->require_subcommand(1);
  std::string node_config;
  auto* node_run = node_cmd->add_subcommand("run", "Run until SIGINT");
  node_run->add_option("-c,--config", node_config, "Node config file")->required()->check(CLI::ExistingFile);

  auto* client_cmd = app.add_subcommand("client", "Talk to a running cluster");
  client_cmd->require_subcommand(1);
  std::vector<std::string> submit_to;
  std::string entry_file, entry_text;
  int timeout_ms = 5000;
  client_cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
  auto* submit_cmd = client_cmd->add_subcommand("submit", "Submit one entry");
  submit_cmd->add_option("--to", submit_to, "Node addresses (host:port), comma separated")->required()->delimiter(',');
  auto* entry_group = submit_cmd->add_option_group("entry");
  entry_group->add_option("--entry-file", entry_file, "File holding the entry bytes")->check(CLI::ExistingFile);
  entry_group->add_option("--entry", entry_text, "Entry given inline");
  entry_group->require_option(1);
  std::string get_from, get_config;
  auto* get_cmd = client_cmd->add_subcommand("get", "Fetch and validate the latest certificate");
  get_cmd->add_option("--from", get_from, "Node address (host:port)")->required();
  get_cmd->add_option("-c,--config", get_config, "Any node config, used for the public keys")->required()->check(CLI::ExistingFile);

  auto* bench_cmd = app.add_subcommand("bench", "Loopback benchmarks and the latency bound");
  bench_cmd->require_subcommand(1);
  net::LatencyOptions lat;
  auto* bench_lat = bench_cmd->add_subcommand("latency", "Smallest round length that still commits every request");
  bench_lat->add_option("-n,--nodes", lat.n);
  bench_lat->add_option("-f,--faults", lat.f);
  bench_lat->add_option("--latency-ms", lat.net.link_latency_ms, "Emulated one-way link latency");
  bench_lat->add_option("--bandwidth-bps", lat.net.bandwidth_bps, "Emulated link bandwidth");
  bench_lat->add_option("--entry-size", lat.net.entry_size);
  bench_lat->add_option("--rounds", lat.rounds_ms, "Round lengths to try, largest first")->delimiter(',');
  bench_lat->add_option("--periods", lat.periods);
  bench_lat->add_option("--attempts", lat.attempts, "Tries per round length");
  net::ThroughputOptions thr;
  auto* bench_thr = bench_cmd->add_subcommand("throughput", "Sustained entries per period");
  bench_thr->add_option("-n,--nodes", thr.n);
  bench_thr->add_option("-f,--faults", thr.f);
  bench_thr->add_option("--entries", thr.entries_per_period, "Entries submitted per period");
  bench_thr->add_option("--entry-size", thr.entry_size);
  bench_thr->add_option("--periods", thr.periods);
  bench_thr->add_option("--period-ms", thr.period_ms);
  bench_thr->add_option("--round-ms", thr.round_ms);
  bench_thr->add_option("--latency-ms", thr.link_latency_ms);
  bench_thr->add_option("--bandwidth-bps", thr.bandwidth_bps);
  bench_thr->add_flag("--padding", thr.padding, "The last f nodes pad their traffic");
  bench_thr->add_option("--seed", thr.seed);
  std::uint16_t bound_f = 2;
  net::NetParams bound_net;
  auto* bench_bound = bench_cmd->add_subcommand("bound", "Lower bound on commit latency");
  bench_bound->add_option("-f,--faults", bound_f);
  bench_bound->add_option("--latency-ms", bound_net.link_latency_ms);
  bench_bound->add_option("--bandwidth-bps", bound_net.bandwidth_bps);
  bench_bound->add_option("--entry-size", bound_net.entry_size);

  auto* sim_cmd = app.add_subcommand("simulate", "Lock-step simulator");
  sim_cmd->require_subcommand(1);
  std::string campaign_file, dump_path, trace_file;
  std::vector<std::string> overrides;
  auto* sim_run = sim_cmd->add_subcommand("run", "Seeded adversary campaign");
  sim_run->add_option("campaign", campaign_file, "Campaign file")->check(CLI::ExistingFile);
  sim_run->add_option("--set", overrides, "key=value override, repeatable");
  sim_run->add_option("--dump", dump_path, "Write the first failing trace here");
  auto* sim_search = sim_cmd->add_subcommand("search", "Exhaustive adversary search");
  sim_search->add_option("campaign", campaign_file, "Campaign file")->check(CLI::ExistingFile);
  sim_search->add_option("--set", overrides, "key=value override, repeatable");
  sim_search->add_option("--dump", dump_path, "Write the first violation trace here");
  bool stop_first = false;
  sim_search->add_flag("--stop-at-first", stop_first);
  auto* sim_replay = sim_cmd->add_subcommand("replay", "Re-run a dumped trace");
  sim_replay->add_option("trace", trace_file, "Trace file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keygen_cmd) return run_keygen(kg);
    if (*node_run) return run_node(node_config);
    if (*submit_cmd) {
      const Entry entry(entry_file.empty() ? to_bytes(entry_text) : to_bytes(read_file(entry_file)));
      const auto nodes = parse_endpoints(submit_to);
      const auto acks = net::Client(std::chrono::milliseconds(timeout_ms)).submit(entry, nodes);
      int rc = 1;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::cout << net::to_string(nodes[i]) << " " << (acks[i] ? status_name(*acks[i]) : "unreachable") << "\n";
        if (acks[i] && (*acks[i] == wire::SubmitStatus::accepted || *acks[i] == wire::SubmitStatus::duplicate)) rc = 0;
      }
      return rc;
    }
    if (*get_cmd) {
      const auto dep = net::load_deployment(get_config);
      const auto cert = net::Client(std::chrono::milliseconds(timeout_ms)).get_certificate(net::parse_endpoint(get_from));
      if (!cert) {
        std::cout << json{{"certificate", nullptr}}.dump(2) << "\n";
        return 1;
      }
      const auto now = static_cast<UnixMillis>(net::wall_ms());
      const auto verdict = validate_certificate(*cert, *dep.registry(), now);
      auto out = certificate_json(*cert);
      out["valid"] = verdict.valid();
      out["status"] = std::string(to_string(verdict.status));
      std::cout << out.dump(2) << "\n";
      return verdict.valid() ? 0 : 2;
    }
    if (*bench_lat) {
      std::cout << net::to_json(net::bench_latency(lat)) << "\n";
      return 0;
    }
    if (*bench_thr) {
      const auto r = net::bench_throughput(thr);
      std::cout << net::to_json(r) << "\n";
      return r.agree && r.all_valid ? 0 : 1;
    }
    if (*bench_bound) {
      const auto b = net::lower_bound_latency(bound_f, bound_net);
      std::cout << json{{"f", bound_f}, {"round_ms", b.round_ms}, {"total_ms", b.total_ms}, {"reference_total_ms", b.reference_total_ms}}.dump(2)
                << "\n";
      return 0;
    }
    if (*sim_run) {
      const auto cfg = load_campaign(campaign_file, overrides);
      const auto r = sim::run_campaign(cfg);
      std::cout << campaign_json(r).dump(2) << "\n";
      if (r.first_failure && !dump_path.empty()) write_file(dump_path, sim::dump_trace(*r.first_failure));
      return r.failed == 0 ? 0 : 1;
    }
    if (*sim_search) {
      const auto cfg = load_campaign(campaign_file, overrides);
      auto opts = sim::search_options(cfg);
      opts.stop_at_first = stop_first;
      const auto r = sim::exhaustive_search(opts);
      json samples = json::array();
      for (const auto& v : r.samples) {
        json failed = json::array();
        for (const auto& f : v.failed) failed.push_back({{"property", f.property}, {"detail", f.detail}});
        samples.push_back({{"seed", v.trace.seed}, {"failed", failed}});
      }
      std::cout << json{{"fault_sets", r.fault_sets}, {"input_vectors", r.input_vectors}, {"leaves", r.leaves},
                        {"expanded", r.expanded},     {"memo_hits", r.memo_hits},         {"violations", r.violations},
                        {"samples", samples},         {"seconds", r.seconds}}
                       .dump(2)
                << "\n";
      if (!r.samples.empty() && !dump_path.empty()) write_file(dump_path, sim::dump_trace(r.samples.front().trace));
      return r.violations == 0 ? 0 : 1;
    }
    if (*sim_replay) {
      const auto r = sim::replay_trace(read_file(trace_file));
      std::cout << (r.matches ? "match" : "mismatch") << "\n";
      if (!r.matches) std::cout << r.replayed;
      return r.matches ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
