#include "logres/net/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <thread>

#include <json.hpp>

namespace logres::net {

double wall_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(system_clock::now().time_since_epoch()).count();
}

void sleep_until_ms(double t) {
  const double now = wall_ms();
  if (t > now) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(t - now));
}

std::vector<std::uint16_t> free_ports(std::size_t count) {
  asio::io_context io;
  std::vector<tcp::acceptor> held;
  std::vector<std::uint16_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    held.emplace_back(io, tcp::endpoint(asio::ip::make_address("127.0.0.1"), 0));
    out.push_back(held.back().local_endpoint().port());
  }
  return out;
}

std::vector<Deployment> make_cluster(const ClusterOptions& opts) {
  const auto ports = free_ports(opts.n);
  Seed seed{};
  seed.fill(opts.key_seed);
  std::vector<KeyPair> keys;
  std::vector<Peer> peers;
  for (std::uint16_t i = 0; i < opts.n; ++i) {
    keys.push_back(keygen(seed, NodeId{i}, Scheme::ed25519));
    peers.push_back(Peer{NodeId{i}, "127.0.0.1", ports[i], keys.back().public_key});
  }
  const auto start = static_cast<UnixMillis>(std::ceil(wall_ms())) + opts.warmup_ms;
  std::vector<Deployment> out;
  for (std::uint16_t i = 0; i < opts.n; ++i) {
    Deployment d;
    d.nodes = peers;
    d.self = NodeId{i};
    d.f = opts.f;
    d.period_ms = opts.period_ms;
    d.round_ms = opts.round_ms;
    d.max_entry = opts.max_entry;
    d.start_ms = start;
    d.secret_key = keys[i].secret;
    d.link_latency_ms = opts.link_latency_ms;
    d.bandwidth_bps = opts.bandwidth_bps;
    if (opts.padding.contains(NodeId{i})) d.byzantine = ByzantineMode::padding;
    if (!opts.data_root.empty()) d.data_dir = (std::filesystem::path(opts.data_root) / ("node-" + std::to_string(i))).string();
    out.push_back(std::move(d));
  }
  return out;
}

LocalCluster::LocalCluster(ClusterOptions opts) : opts_(std::move(opts)), deps_(make_cluster(opts_)) {
  services_.resize(opts_.n);
  sched_ = Schedule{deps_.front().start_ms, opts_.period_ms, opts_.round_ms, Round(opts_.f) + 1};
}

LocalCluster::~LocalCluster() { stop(); }

void LocalCluster::start() {
  for (std::uint16_t i = 0; i < opts_.n; ++i) {
    if (opts_.crashed.contains(NodeId{i}) || services_[i]) continue;
    services_[i] = std::make_unique<NodeService>(deps_[i]);
  }
  for (auto& s : services_) {
    if (s) s->start();
  }
}

void LocalCluster::stop() {
  for (auto& s : services_) s.reset();
}

void LocalCluster::crash(NodeId id) { services_.at(id.value).reset(); }

void LocalCluster::restart(NodeId id) {
  services_.at(id.value).reset();
  services_[id.value] = std::make_unique<NodeService>(deps_.at(id.value));
  services_[id.value]->start();
}

std::vector<NodeId> LocalCluster::running() const {
  std::vector<NodeId> out;
  for (std::uint16_t i = 0; i < opts_.n; ++i) {
    if (services_[i]) out.push_back(NodeId{i});
  }
  return out;
}

Endpoint LocalCluster::endpoint(NodeId id) const {
  const auto& p = deps_.at(id.value).peer(id);
  return Endpoint{p.host, p.port};
}

Entry workload_entry(std::uint64_t seed, std::uint64_t index, std::size_t size) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + index);
  Bytes b(size);
  for (auto& x : b) x = static_cast<std::uint8_t>('a' + rng() % 26);
  return Entry(std::move(b));
}

namespace {

const LogCertificate* cert_for_slot(const std::vector<Publication>& pubs, std::uint64_t slot) {
  for (const auto& p : pubs) {
    if (p.slot == slot) return &p.cert;
  }
  return nullptr;
}

LatencyTrial latency_trial(const LatencyOptions& opts, double round_ms, std::uint64_t salt) {
  LatencyTrial t;
  t.round_ms = round_ms;
  ClusterOptions c;
  c.n = opts.n;
  c.f = opts.f;
  c.round_ms = round_ms;
  c.period_ms = opts.collection_ms + static_cast<Millis>(std::ceil((opts.f + 2) * round_ms));
  c.link_latency_ms = opts.net.link_latency_ms;
  c.bandwidth_bps = opts.net.bandwidth_bps;
  c.max_entry = std::max(kDefaultMaxEntrySize, opts.net.entry_size);
  LocalCluster cluster(c);
  cluster.start();
  const auto& sched = cluster.schedule();
  Client client(std::chrono::milliseconds(1000));

  std::vector<Endpoint> targets;
  for (std::uint16_t i = 0; i <= opts.f; ++i) targets.push_back(cluster.endpoint(NodeId{i}));
  std::vector<Entry> submitted;
  for (std::size_t p = 0; p < opts.periods; ++p) {
    sleep_until_ms(sched.slot_start(p) + 10);
    submitted.push_back(workload_entry(salt, p, opts.net.entry_size));
    client.submit(submitted.back(), targets);
  }
  sleep_until_ms(sched.slot_start(opts.periods) + 100);

  const auto reg = cluster.registry();
  double sum = 0;
  std::size_t count = 0;
  t.ok = true;
  for (std::size_t p = 0; p < opts.periods && t.ok; ++p) {
    const LogCertificate* reference = nullptr;
    for (auto id : cluster.running()) {
      const auto pubs = cluster.service(id)->publications();
      const auto* cert = cert_for_slot(pubs, p);
      if (!cert) {
        t.ok = false;
        t.detail = "node " + std::to_string(id.value) + " published nothing in period " + std::to_string(p);
        break;
      }
      if (!cert->log.entries.contains(submitted[p])) {
        t.ok = false;
        t.detail = "request of period " + std::to_string(p) + " missing at node " + std::to_string(id.value);
        break;
      }
      if (!validate_certificate(*cert, *reg, cert->log.expiration - 1).valid()) {
        t.ok = false;
        t.detail = "invalid certificate at node " + std::to_string(id.value);
        break;
      }
      if (reference && !(*reference == *cert)) {
        t.ok = false;
        t.detail = "certificates disagree in period " + std::to_string(p);
        break;
      }
      reference = cert;
      for (const auto& pub : pubs) {
        if (pub.slot == p) {
          sum += pub.published_ms - pub.replication_start_ms;
          ++count;
        }
      }
    }
  }
  if (count) t.observed_ms = sum / static_cast<double>(count);
  cluster.stop();
  return t;
}

}  // namespace

LatencyReport bench_latency(const LatencyOptions& opts) {
  LatencyReport r;
  r.n = opts.n;
  r.f = opts.f;
  r.net = opts.net;
  r.bound = lower_bound_latency(opts.f, opts.net);
  std::uint64_t salt = 1;
  for (double round : opts.rounds_ms) {
    LatencyTrial t;
    for (std::size_t a = 0; a < std::max<std::size_t>(opts.attempts, 1) && !t.ok; ++a) {
      t = latency_trial(opts, round, salt++);
      r.trials.push_back(t);
    }
    if (!t.ok) break;
    r.min_round_ms = round;
    r.latency_ms = (opts.f + 2) * round;
    r.observed_ms = t.observed_ms;
  }
  return r;
}

ThroughputReport bench_throughput(const ThroughputOptions& opts) {
  ThroughputReport r;
  r.n = opts.n;
  r.f = opts.f;
  r.padding = opts.padding;
  r.period_ms = opts.period_ms;

  ClusterOptions c;
  c.n = opts.n;
  c.f = opts.f;
  c.period_ms = opts.period_ms;
  c.round_ms = opts.round_ms;
  c.link_latency_ms = opts.link_latency_ms;
  c.bandwidth_bps = opts.bandwidth_bps;
  c.max_entry = std::max(kDefaultMaxEntrySize, opts.entry_size);
  c.warmup_ms = 500;
  if (opts.padding) {
    for (std::uint16_t i = opts.n - opts.f; i < opts.n; ++i) c.padding.insert(NodeId{i});
  }
  LocalCluster cluster(c);
  cluster.start();
  const auto& sched = cluster.schedule();
  Client client(std::chrono::milliseconds(20000));

  for (std::size_t p = 0; p < opts.periods; ++p) {
    std::vector<std::vector<Entry>> per_node(opts.n);
    for (std::size_t j = 0; j < opts.entries_per_period; ++j) {
      const auto e = workload_entry(opts.seed, p * opts.entries_per_period + j, opts.entry_size);
      // Each request goes to f+1 distinct nodes.
      for (std::uint16_t k = 0; k <= opts.f; ++k) per_node[(j + k) % opts.n].push_back(e);
    }
    sleep_until_ms(sched.slot_start(p) + 20);
    for (std::uint16_t i = 0; i < opts.n; ++i) {
      if (!per_node[i].empty()) client.submit_batch(per_node[i], cluster.endpoint(NodeId{i}));
    }
    r.submitted += opts.entries_per_period;
    if (wall_ms() > sched.replication_start(p)) r.detail = "submission overran the collection window";
  }
  sleep_until_ms(sched.slot_start(opts.periods) + 300);

  const auto reg = cluster.registry();
  std::vector<std::vector<Publication>> pubs(opts.n);
  for (auto id : cluster.running()) pubs[id.value] = cluster.service(id)->publications();
  r.agree = true;
  r.all_valid = true;
  std::size_t prev = 0;
  EntrySet prev_entries;
  for (std::size_t p = 0; p < opts.periods; ++p) {
    const LogCertificate* reference = nullptr;
    for (auto id : cluster.running()) {
      const auto* cert = cert_for_slot(pubs[id.value], p);
      if (!cert) {
        r.agree = false;
        r.detail = "node " + std::to_string(id.value) + " published nothing in period " + std::to_string(p);
        continue;
      }
      if (!validate_certificate(*cert, *reg, cert->log.expiration - 1).valid()) r.all_valid = false;
      if (reference && !(*reference == *cert)) r.agree = false;
      if (!reference) reference = cert;
    }
    if (!reference) break;
    r.new_entries.push_back(reference->log.entries.size() - prev);
    r.epoch_entries.push_back(reference->log.entries.minus(prev_entries));
    prev = reference->log.entries.size();
    prev_entries = reference->log.entries;
  }
  for (auto id : cluster.running()) r.bytes_sent += cluster.service(id)->stats().transport.bytes_out;
  std::size_t total = 0;
  for (auto k : r.new_entries) total += k;
  r.entries_per_second = static_cast<double>(total) / (static_cast<double>(opts.periods * opts.period_ms) / 1000.0);
  cluster.stop();
  return r;
}

std::string to_json(const LatencyReport& r) {
  nlohmann::json j;
  j["kind"] = "latency";
  j["n"] = r.n;
  j["f"] = r.f;
  j["link_latency_ms"] = r.net.link_latency_ms;
  j["bandwidth_bps"] = r.net.bandwidth_bps;
  j["entry_size"] = r.net.entry_size;
  j["lower_bound_ms"] = r.bound.total_ms;
  j["reference_lower_bound_ms"] = r.bound.reference_total_ms;
  j["min_round_ms"] = r.min_round_ms ? nlohmann::json(*r.min_round_ms) : nlohmann::json(nullptr);
  j["latency_ms"] = r.latency_ms ? nlohmann::json(*r.latency_ms) : nlohmann::json(nullptr);
  j["observed_ms"] = r.observed_ms ? nlohmann::json(*r.observed_ms) : nlohmann::json(nullptr);
  auto& trials = j["trials"] = nlohmann::json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"round_ms", t.round_ms}, {"ok", t.ok}, {"observed_ms", t.observed_ms}, {"detail", t.detail}});
  }
  return j.dump(2);
}

std::string to_json(const ThroughputReport& r) {
  nlohmann::json j;
  j["kind"] = "throughput";
  j["n"] = r.n;
  j["f"] = r.f;
  j["padding"] = r.padding;
  j["period_ms"] = r.period_ms;
  j["submitted"] = r.submitted;
  j["new_entries"] = r.new_entries;
  j["agree"] = r.agree;
  j["all_valid"] = r.all_valid;
  j["entries_per_second"] = r.entries_per_second;
  j["bytes_sent"] = r.bytes_sent;
  j["detail"] = r.detail;
  return j.dump(2);
}

}  // namespace logres::net
