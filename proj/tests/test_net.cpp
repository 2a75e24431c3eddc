#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "logres/net/bench.hpp"

using namespace logres;
using namespace logres::net;

namespace {

void send_raw(const Endpoint& ep, const Bytes& data) {
  asio::io_context io;
  tcp::socket s(io);
  s.connect(tcp::endpoint(asio::ip::make_address(ep.host), ep.port));
  asio::write(s, asio::buffer(data));
}

ClusterOptions small_cluster() {
  ClusterOptions c;
  c.n = 5;
  c.f = 2;
  c.round_ms = 40;
  c.period_ms = 400;
  return c;
}

const LogCertificate* cert_at(const std::vector<Publication>& pubs, std::uint64_t slot) {
  for (const auto& p : pubs) {
    if (p.slot == slot) return &p.cert;
  }
  return nullptr;
}

std::string sample_config() {
  Seed seed{};
  seed.fill(3);
  std::string text = "self = 1\nf = 1\nperiod_ms = 1000\nround_ms = 50.5\nmax_entry = 2048\n";
  for (std::uint16_t i = 0; i < 3; ++i) {
    const auto kp = keygen(seed, NodeId{i});
    if (i == 1) text += "secret_key = " + to_hex(kp.secret) + "\n";
    text += "node = " + std::to_string(i) + " 127.0.0.1:" + std::to_string(7000 + i) + " " + to_hex(kp.public_key) + "\n";
  }
  text += "link_latency_ms = 20\nbandwidth_bps = 100000000\n# trailing comment\n";
  return text;
}

}  // namespace

TEST_CASE("latency lower bound") {
  const NetParams p;  // 20 ms, 100 Mb/s, 1570 B
  const double analytic[] = {40.2512, 60.3768, 80.5024};
  const double reference[] = {40.34, 60.51, 80.68};
  for (std::uint16_t f = 0; f <= 2; ++f) {
    const auto b = lower_bound_latency(f, p);
    CHECK(b.round_ms == doctest::Approx(20.1256).epsilon(1e-9));
    CHECK(b.total_ms == doctest::Approx(analytic[f]).epsilon(1e-9));
    CHECK(std::abs(b.reference_total_ms - reference[f]) <= 0.01 * reference[f]);
    CHECK(std::abs(b.total_ms - reference[f]) <= 0.5);
  }
  NetParams ideal{0, std::numeric_limits<double>::infinity(), 1570};
  CHECK(lower_bound_latency(2, ideal).total_ms == 0);
  CHECK_THROWS_AS(lower_bound_latency(1, NetParams{20, 0, 1570}), std::invalid_argument);
}

TEST_CASE("deployment config") {
  const auto d = parse_deployment(sample_config());
  CHECK(d.self == NodeId{1});
  CHECK(d.f == 1);
  CHECK(d.n() == 3);
  CHECK(d.round_ms == 50.5);
  CHECK(d.max_entry == 2048);
  CHECK(d.peer(NodeId{2}).port == 7002);
  CHECK(d.link_latency_ms == 20);
  CHECK_NOTHROW(d.validate());
  CHECK(d.key().public_key == d.peer(NodeId{1}).public_key);

  const auto again = parse_deployment(format_deployment(d));
  CHECK(again.nodes.size() == 3);
  CHECK(again.secret_key == d.secret_key);
  CHECK(again.round_ms == d.round_ms);

  auto short_period = d;
  short_period.period_ms = 150;
  CHECK_THROWS_AS(short_period.validate(), std::invalid_argument);
  auto dup = d;
  dup.nodes[2].port = 7001;
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
  auto wrong_key = d;
  wrong_key.self = NodeId{0};
  CHECK_THROWS_AS(wrong_key.validate(), std::invalid_argument);
  auto too_few = d;
  too_few.f = 2;
  CHECK_THROWS_AS(too_few.validate(), std::invalid_argument);

  CHECK_THROWS_AS(parse_deployment("self = x\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_deployment("node = 0 nohost abcd\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_deployment("speed = 3\n"), std::invalid_argument);

  const auto path = std::filesystem::temp_directory_path() / "logres-test-deployment.conf";
  {
    std::ofstream out(path);
    out << sample_config() << "data_dir = /from/file\n";
  }
  CHECK(load_deployment(path.string()).data_dir == "/from/file");
  ::setenv("LOGRES_DATA_DIR", "/from/env", 1);
  CHECK(load_deployment(path.string()).data_dir == "/from/env");
  ::unsetenv("LOGRES_DATA_DIR");
  std::filesystem::remove(path);
}

TEST_CASE("frame admission") {
  const Position node{4, 2};
  CHECK(admit({4, 2}, node) == Admission::current);
  CHECK(admit({4, 1}, node) == Admission::late);
  CHECK(admit({3, 3}, node) == Admission::late);
  CHECK(admit({4, 3}, node) == Admission::early);
  CHECK(admit({5, 1}, node) == Admission::early);
  CHECK(admit({6, 1}, node) == Admission::too_far);

  Inbox inbox;
  const NodeMessage m = LogSigMsg{NodeId{1}, 4, {}, {}};
  CHECK(inbox.offer({4, 3}, m, node) == Admission::early);
  CHECK(inbox.offer({4, 1}, m, node) == Admission::late);
  CHECK(inbox.offer({5, 2}, m, node) == Admission::early);
  CHECK(inbox.buffered() == 2);
  CHECK(inbox.take({4, 3}).size() == 1);
  CHECK(inbox.take({4, 3}).empty());
  inbox.prune({6, 0});
  CHECK(inbox.buffered() == 0);
}

TEST_CASE("schedule arithmetic") {
  const Schedule s{10'000, 1000, 50, 3};
  CHECK(s.slot_start(2) == 12'000);
  CHECK(s.replication_start(0) == 10'800);
  CHECK(s.step_end(0, 1) == 10'850);
  CHECK(s.step_end(0, 3) == 10'950);
  CHECK(s.step_end(0, 4) == 11'000);
  CHECK(s.first_joinable(9'000) == 0);
  CHECK(s.first_joinable(10'500) == 0);
  CHECK(s.first_joinable(10'900) == 1);
}

TEST_CASE("loopback cluster with one crashed node") {
  auto opts = small_cluster();
  opts.crashed = {NodeId{4}};
  LocalCluster cluster(opts);
  cluster.start();
  const auto& sched = cluster.schedule();
  Client client(std::chrono::milliseconds(2000));
  const auto reg = cluster.registry();

  // Slot 0: one entry to f+1 nodes, submitted twice to one of them.
  sleep_until_ms(sched.slot_start(0) + 20);
  const auto e = Entry::from_string("first entry");
  const auto acks = client.submit(e, {cluster.endpoint(NodeId{0}), cluster.endpoint(NodeId{1}), cluster.endpoint(NodeId{2})});
  REQUIRE(acks.size() == 3);
  for (const auto& a : acks) CHECK(a == wire::SubmitStatus::accepted);
  CHECK(client.submit(e, {cluster.endpoint(NodeId{0})})[0] == wire::SubmitStatus::duplicate);
  CHECK(client.submit(Entry(Bytes(opts.max_entry + 1, 'x')), {cluster.endpoint(NodeId{0})})[0] ==
        wire::SubmitStatus::oversized);
  CHECK_FALSE(client.submit(e, {cluster.endpoint(NodeId{4})})[0].has_value());
  CHECK_FALSE(client.get_certificate(cluster.endpoint(NodeId{1})).has_value());

  // Slot 1: nothing new; fetch during replication returns slot 0's log.
  sleep_until_ms(sched.replication_start(1) + 5);
  const auto mid = client.get_certificate(cluster.endpoint(NodeId{3}));
  REQUIRE(mid.has_value());
  CHECK(mid->log.epoch == 1);
  CHECK(validate_certificate(*mid, *reg, mid->log.expiration - 1).valid());
  // The same entry again after publication is a duplicate.
  CHECK(client.submit(e, {cluster.endpoint(NodeId{2})})[0] == wire::SubmitStatus::duplicate);

  sleep_until_ms(sched.slot_start(2) + 50);
  std::optional<LogCertificate> reference;
  for (std::uint16_t i = 0; i < 4; ++i) {
    const auto pubs = cluster.service(NodeId{i})->publications();
    for (std::uint64_t slot = 0; slot < 2; ++slot) {
      const auto* c = cert_at(pubs, slot);
      REQUIRE(c != nullptr);
      CHECK(c->log.epoch == slot + 1);
      CHECK(validate_certificate(*c, *reg, c->log.expiration - 1).valid());
      CHECK(c->sigs.size() == 4);
    }
    const auto* last = cert_at(pubs, 1);
    if (reference) CHECK(*reference == *last);
    reference = *last;
  }
  CHECK(reference->log.entries.size() == 1);
  CHECK(reference->log.entries.contains(e));

  // Accepting a certificate implies it matches every correct node's log.
  const auto fetched = client.get_certificate(cluster.endpoint(NodeId{0}));
  REQUIRE(fetched.has_value());
  CHECK(validate_certificate(*fetched, *reg, fetched->log.expiration - 1).valid());
  CHECK(fetched->log == reference->log);
}

TEST_CASE("late and corrupt frames are dropped") {
  auto opts = small_cluster();
  LocalCluster cluster(opts);
  cluster.start();
  const auto& sched = cluster.schedule();

  sleep_until_ms(sched.slot_start(0) + 20);
  Client client(std::chrono::milliseconds(2000));
  const auto e = Entry::from_string("payload");
  client.submit(e, {cluster.endpoint(NodeId{0}), cluster.endpoint(NodeId{1}), cluster.endpoint(NodeId{2})});

  // In slot 1 a round-1 frame for epoch 1 arrives long after its deadline.
  sleep_until_ms(sched.replication_start(1) + 60);
  const auto before = cluster.service(NodeId{3})->stats();
  ReplicationBundle stale{NodeId{1}, 1, 1, {}};
  send_raw(cluster.endpoint(NodeId{3}), wire::encode_message(stale));
  // A frame with a valid header but an unknown type.
  Bytes junk = wire::encode_frame(wire::FrameType::log_signature, Bytes{1, 2, 3});
  junk[4] = 0x7f;
  send_raw(cluster.endpoint(NodeId{3}), junk);

  sleep_until_ms(sched.slot_start(2) + 50);
  const auto after = cluster.service(NodeId{3})->stats();
  CHECK(after.late_frames >= before.late_frames + 1);
  CHECK(after.transport.bad_frames >= before.transport.bad_frames + 1);
  const auto pubs = cluster.service(NodeId{3})->publications();
  REQUIRE(cert_at(pubs, 1) != nullptr);
  CHECK(cert_at(pubs, 1)->log.entries.contains(e));
  CHECK(*cert_at(pubs, 1) == *cert_at(cluster.service(NodeId{0})->publications(), 1));
}

TEST_CASE("restarted node recovers from disk and catches up") {
  const auto root = std::filesystem::temp_directory_path() / ("logres-net-" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  auto opts = small_cluster();
  opts.data_root = root.string();
  LocalCluster cluster(opts);
  cluster.start();
  const auto& sched = cluster.schedule();
  Client client(std::chrono::milliseconds(2000));

  sleep_until_ms(sched.slot_start(0) + 20);
  client.submit(Entry::from_string("one"), {cluster.endpoint(NodeId{0}), cluster.endpoint(NodeId{1}), cluster.endpoint(NodeId{4})});
  sleep_until_ms(sched.slot_start(1) + 20);
  CHECK(std::filesystem::exists(root / "node-4" / "cert.bin"));
  CHECK(std::filesystem::exists(root / "node-4" / "pending.bin"));
  cluster.crash(NodeId{4});

  client.submit(Entry::from_string("two"), {cluster.endpoint(NodeId{0}), cluster.endpoint(NodeId{1}), cluster.endpoint(NodeId{2})});
  sleep_until_ms(sched.slot_start(2) + 20);
  cluster.restart(NodeId{4});
  // Slot 2: node 4 restarts from epoch 1 on disk and adopts epoch 2 from a peer.
  sleep_until_ms(sched.slot_start(4) + 50);

  const auto pubs4 = cluster.service(NodeId{4})->publications();
  const auto pubs0 = cluster.service(NodeId{0})->publications();
  REQUIRE(cert_at(pubs0, 3) != nullptr);
  REQUIRE(cert_at(pubs4, 3) != nullptr);
  CHECK(*cert_at(pubs4, 3) == *cert_at(pubs0, 3));
  CHECK(cert_at(pubs4, 3)->log.entries.contains(Entry::from_string("two")));
  CHECK(cluster.service(NodeId{4})->stats().catchups >= 1);
  cluster.stop();
  std::filesystem::remove_all(root);
}

TEST_CASE("padding nodes do not change the published logs") {
  ThroughputOptions t;
  t.entries_per_period = 40;
  t.periods = 2;
  t.period_ms = 700;
  t.round_ms = 100;
  t.link_latency_ms = 5;
  t.bandwidth_bps = 0;
  const auto clean = bench_throughput(t);
  t.padding = true;
  const auto padded = bench_throughput(t);
  CHECK(clean.agree);
  CHECK(padded.agree);
  CHECK(clean.all_valid);
  CHECK(padded.all_valid);
  REQUIRE(clean.epoch_entries.size() == 2);
  CHECK(clean.epoch_entries == padded.epoch_entries);
  CHECK(clean.new_entries == std::vector<std::size_t>{40, 40});
  CHECK(padded.bytes_sent > clean.bytes_sent);
}

TEST_CASE("empty workload still publishes") {
  auto opts = small_cluster();
  LocalCluster cluster(opts);
  cluster.start();
  sleep_until_ms(cluster.schedule().slot_start(2) + 50);
  for (auto id : cluster.running()) {
    const auto pubs = cluster.service(id)->publications();
    REQUIRE(pubs.size() >= 2);
    CHECK(pubs[1].cert.log.entries.empty());
    CHECK(pubs[1].cert.log.epoch == 2);
  }
}
