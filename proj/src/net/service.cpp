#include "logres/net/service.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace logres::net {

namespace fs = std::filesystem;

namespace {

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(system_clock::now().time_since_epoch()).count();
}

std::chrono::system_clock::time_point at_time(double ms) {
  using namespace std::chrono;
  return system_clock::time_point(duration_cast<system_clock::duration>(duration<double, std::milli>(ms)));
}

std::optional<Bytes> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_atomic(const fs::path& p, const Bytes& data) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  fs::rename(tmp, p);
}

Position position_of(const NodeMessage& m, Round rounds) {
  if (const auto* b = std::get_if<ReplicationBundle>(&m)) return {b->epoch, b->round};
  return {std::get<LogSigMsg>(m).epoch, rounds + 1};
}

/// Fetches one peer's latest certificate; the callback runs on the I/O thread.
class CertFetch : public std::enable_shared_from_this<CertFetch> {
 public:
  using Done = std::function<void(std::optional<LogCertificate>)>;

  CertFetch(asio::io_context& io, tcp::endpoint ep, Done done) : socket_(io), timer_(io), ep_(ep), done_(std::move(done)) {}

  void run(std::chrono::milliseconds timeout) {
    timer_.expires_after(timeout);
    timer_.async_wait([self = shared_from_this()](const boost::system::error_code& ec) {
      if (!ec) self->finish(std::nullopt);
    });
    socket_.async_connect(ep_, [self = shared_from_this()](const boost::system::error_code& ec) {
      if (ec) return self->finish(std::nullopt);
      self->request_ = wire::encode_frame(wire::FrameType::certificate_request, {});
      asio::async_write(self->socket_, asio::buffer(self->request_), [self](const boost::system::error_code& ec2, std::size_t) {
        if (ec2) return self->finish(std::nullopt);
        self->read();
      });
    });
  }

 private:
  void read() {
    buf_.resize(4);
    asio::async_read(socket_, asio::buffer(buf_), [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
      if (ec) return self->finish(std::nullopt);
      const auto len = wire::frame_length(self->buf_);
      if (len == 0 || len > wire::kMaxFrameLength) return self->finish(std::nullopt);
      self->buf_.resize(4 + static_cast<std::size_t>(len));
      asio::async_read(self->socket_, asio::buffer(self->buf_.data() + 4, len), [self](const boost::system::error_code& ec2, std::size_t) {
        if (ec2) return self->finish(std::nullopt);
        try {
          auto frame = wire::decode_frame(self->buf_);
          if (frame.type != wire::FrameType::certificate_response) return self->finish(std::nullopt);
          self->finish(wire::decode_certificate_response(frame.body));
        } catch (const DecodeError&) {
          self->finish(std::nullopt);
        }
      });
    });
  }

  void finish(std::optional<LogCertificate> cert) {
    if (finished_) return;
    finished_ = true;
    timer_.cancel();
    boost::system::error_code ignored;
    socket_.close(ignored);
    done_(std::move(cert));
  }

  tcp::socket socket_;
  asio::steady_timer timer_;
  tcp::endpoint ep_;
  Done done_;
  Bytes request_;
  Bytes buf_;
  bool finished_ = false;
};

}  // namespace

Admission admit(Position frame, Position node) {
  if (frame < node) return Admission::late;
  if (frame == node) return Admission::current;
  if (frame.epoch <= node.epoch + 1) return Admission::early;
  return Admission::too_far;
}

Admission Inbox::offer(Position at, NodeMessage msg, Position node) {
  const auto verdict = admit(at, node);
  if (verdict == Admission::early) slots_[at].push_back(std::move(msg));
  return verdict;
}

std::vector<NodeMessage> Inbox::take(Position at) {
  auto it = slots_.find(at);
  if (it == slots_.end()) return {};
  auto out = std::move(it->second);
  slots_.erase(it);
  return out;
}

void Inbox::prune(Position at) { slots_.erase(slots_.begin(), slots_.lower_bound(at)); }

std::size_t Inbox::buffered() const {
  std::size_t n = 0;
  for (const auto& [at, msgs] : slots_) n += msgs.size();
  return n;
}

std::uint64_t Schedule::first_joinable(double now) const {
  if (now <= static_cast<double>(start_ms)) return 0;
  auto k = static_cast<std::uint64_t>(std::floor((now - static_cast<double>(start_ms)) / static_cast<double>(period_ms)));
  if (now >= replication_start(k)) ++k;
  return k;
}

NodeService::NodeService(Deployment dep) : dep_(std::move(dep)) {
  dep_.validate();
  ProtocolParams params;
  params.max_entry_size = dep_.max_entry;
  node_ = std::make_unique<Node>(dep_.key(), dep_.registry(), params, genesis_log());
  sched_ = Schedule{dep_.start_ms, dep_.period_ms, dep_.round_ms, node_->replication_rounds()};
  timer_ = std::make_unique<asio::system_timer>(io_);
  const auto& me = dep_.peer(dep_.self);
  transport_ = std::make_unique<Transport>(io_, me.host, me.port, LinkParams{dep_.link_latency_ms, dep_.bandwidth_bps});
  for (const auto& p : dep_.nodes) {
    if (p.id != dep_.self) transport_->add_peer(p.id, p.host, p.port);
  }
}

NodeService::~NodeService() { stop(); }

void NodeService::start() {
  if (started_) return;
  started_ = true;
  load_state();
  transport_->start([this](wire::Frame f, const Reply& reply) { on_frame(std::move(f), reply); });
  const auto k = sched_.first_joinable(now_ms());
  schedule(sched_.slot_start(k), [this, k] { slot_begin(k); });
  thread_ = std::thread([this] { io_.run(); });
}

void NodeService::stop() {
  if (!started_) return;
  started_ = false;
  asio::post(io_, [this] {
    timer_->cancel();
    transport_->stop();
    io_.stop();
  });
  if (thread_.joinable()) thread_.join();
}

std::optional<LogCertificate> NodeService::latest_certificate() const {
  std::lock_guard lock(mu_);
  return latest_;
}

std::vector<Publication> NodeService::publications() const {
  std::lock_guard lock(mu_);
  return publications_;
}

ServiceStats NodeService::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void NodeService::schedule(double at, std::function<void()> fn) {
  timer_->expires_at(at_time(at));
  timer_->async_wait([fn = std::move(fn)](const boost::system::error_code& ec) {
    if (!ec) fn();
  });
}

Position NodeService::position() const { return {node_->target_epoch(), step_}; }

void NodeService::slot_begin(std::uint64_t k) {
  const auto kind = node_->state().phase.kind;
  if (kind == PhaseKind::published || kind == PhaseKind::failed) node_->start_next_epoch();
  if (adoptable_) {
    node_->adopt(*adoptable_);
    std::lock_guard lock(mu_);
    latest_ = *adoptable_;
    ++stats_.catchups;
    adoptable_.reset();
  }
  for (auto& e : queued_) node_->collect(std::move(e));
  queued_.clear();
  queued_keys_.clear();
  step_ = 0;
  bundles_.clear();
  sigs_.clear();
  inbox_.prune(position());
  {
    std::lock_guard lock(mu_);
    ++stats_.slots;
  }
  if (behind_) {
    behind_ = false;
    request_certificates();
  }
  schedule(sched_.replication_start(k), [this, k] { replication_begin(k); });
}

void NodeService::replication_begin(std::uint64_t k) {
  node_->begin_replication();
  replication_start_ms_ = sched_.replication_start(k);
  step_ = 1;
  send_round(1);
  drain(position());
  schedule(sched_.step_end(k, 1), [this, k] { step_end(k, 1); });
}

void NodeService::step_end(std::uint64_t k, Round r) {
  const Round R = sched_.rounds;
  if (r <= R) {
    node_->replication_next(bundles_);
    bundles_.clear();
    if (r < R) {
      step_ = r + 1;
      send_round(r + 1);
    } else {
      step_ = R + 1;
      // Every correct node stamps the log with the same scheduled instant.
      const auto stamp = static_cast<UnixMillis>(std::llround(sched_.step_end(k, R)));
      broadcast(wire::encode_message(node_->signing_send(stamp, dep_.period_ms)));
    }
    drain(position());
    schedule(sched_.step_end(k, r + 1), [this, k, r] { step_end(k, r + 1); });
    return;
  }

  auto cert = node_->signing_next(sigs_);
  sigs_.clear();
  {
    std::lock_guard lock(mu_);
    if (cert) {
      latest_ = *cert;
      publications_.push_back(Publication{k, *cert, replication_start_ms_, now_ms()});
      ++stats_.published;
    } else {
      ++stats_.failed;
    }
    stats_.transport = transport_->stats();
  }
  persist();
  slot_begin(k + 1);
}

void NodeService::send_round(Round r) {
  auto bundles = node_->replication_send();
  if (dep_.byzantine == ByzantineMode::padding && r >= 2) {
    // Self-signed junk in our own thread: it fails the witness threshold at
    // every correct node but still has to be received and checked.
    const auto epoch = node_->target_epoch();
    std::mt19937_64 rng(epoch * 1000003u + r * 131u + dep_.self.value);
    std::vector<WitnessedValue> junk;
    const std::size_t size = std::min<std::size_t>(1570, dep_.max_entry);
    for (std::size_t i = 0; i < dep_.padding_values; ++i) {
      Bytes b(size);
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
      EntrySet x{std::vector<Entry>{Entry(std::move(b))}};
      WitnessedValue wv{x, dep_.self, {}};
      wv.witnesses.emplace(dep_.self, sign(node_->key(), vote_payload(node_->params().binding, x, dep_.self, epoch)).bytes);
      junk.push_back(std::move(wv));
    }
    for (const auto& p : dep_.nodes) {
      if (p.id == dep_.self) continue;
      auto [it, fresh] = bundles.try_emplace(p.id);
      if (fresh) it->second = ReplicationBundle{dep_.self, epoch, r, {}};
      it->second.msgs.push_back(ReplicateMsg{dep_.self, epoch, r, dep_.self, junk});
    }
  }
  for (auto& [to, bundle] : bundles) transport_->send(to, wire::encode_message(bundle));
}

void NodeService::broadcast(const Bytes& frame) {
  for (const auto& p : dep_.nodes) {
    if (p.id != dep_.self) transport_->send(p.id, frame);
  }
}

void NodeService::drain(Position at) {
  for (auto& m : inbox_.take(at)) {
    if (auto* b = std::get_if<ReplicationBundle>(&m)) bundles_.push_back(std::move(*b));
    else sigs_.push_back(std::get<LogSigMsg>(std::move(m)));
  }
}

void NodeService::on_frame(wire::Frame frame, const Reply& reply) {
  switch (frame.type) {
    case wire::FrameType::replication_bundle:
    case wire::FrameType::log_signature: {
      NodeMessage msg;
      try {
        msg = wire::decode_message(frame);
      } catch (const DecodeError&) {
        std::lock_guard lock(mu_);
        ++stats_.bad_frames;
        return;
      }
      on_peer_message(std::move(msg));
      return;
    }
    case wire::FrameType::client_submit:
      on_submit(frame.body, reply);
      return;
    case wire::FrameType::certificate_request: {
      std::optional<LogCertificate> cert;
      {
        std::lock_guard lock(mu_);
        cert = latest_;
      }
      reply(wire::encode_frame(wire::FrameType::certificate_response, wire::encode_certificate_response(cert)));
      return;
    }
    default: {
      std::lock_guard lock(mu_);
      ++stats_.bad_frames;
    }
  }
}

void NodeService::on_peer_message(NodeMessage msg) {
  const auto at = position_of(msg, sched_.rounds);
  const auto here = position();
  if (at.epoch > here.epoch) behind_ = true;
  const bool replication_now = node_->state().phase.kind == PhaseKind::replication;
  const bool signing_now = node_->state().phase.kind == PhaseKind::signing;
  Admission verdict;
  if (at == here && (replication_now || signing_now)) {
    verdict = Admission::current;
    if (auto* b = std::get_if<ReplicationBundle>(&msg)) bundles_.push_back(std::move(*b));
    else sigs_.push_back(std::get<LogSigMsg>(std::move(msg)));
  } else {
    verdict = inbox_.offer(at, std::move(msg), here);
    // Our own step counter only moves on schedule; a frame for the current
    // step outside an active phase (a finished epoch) is stale.
    if (verdict == Admission::current) verdict = Admission::late;
  }
  std::lock_guard lock(mu_);
  if (verdict == Admission::late) ++stats_.late_frames;
  else if (verdict != Admission::current) ++stats_.early_frames;
}

void NodeService::on_submit(const Bytes& body, const Reply& reply) {
  auto status = wire::SubmitStatus::accepted;
  if (body.empty()) {
    status = wire::SubmitStatus::rejected;
  } else if (body.size() > dep_.max_entry) {
    status = wire::SubmitStatus::oversized;
  } else {
    Entry e(body);
    switch (node_->collect(e)) {
      case CollectResult::added: status = wire::SubmitStatus::accepted; break;
      case CollectResult::duplicate: status = wire::SubmitStatus::duplicate; break;
      case CollectResult::oversized: status = wire::SubmitStatus::oversized; break;
      case CollectResult::wrong_phase: {
        // Outside the collection window: hold it for the next one.
        const auto& st = node_->state();
        if (st.log.entries.contains(e) || st.entries.contains(e) || !queued_keys_.insert(body).second) {
          status = wire::SubmitStatus::duplicate;
        } else {
          queued_.push_back(std::move(e));
        }
        break;
      }
    }
  }
  {
    std::lock_guard lock(mu_);
    ++stats_.submits;
  }
  reply(wire::encode_frame(wire::FrameType::submit_ack, Bytes{static_cast<std::uint8_t>(status)}));
}

void NodeService::request_certificates() {
  const auto timeout = std::chrono::milliseconds(std::max<Millis>(50, dep_.period_ms / 4));
  for (const auto& p : dep_.nodes) {
    if (p.id == dep_.self) continue;
    boost::system::error_code ec;
    auto addr = asio::ip::make_address(p.host, ec);
    tcp::endpoint ep;
    if (!ec) {
      ep = tcp::endpoint(addr, p.port);
    } else {
      tcp::resolver resolver(io_);
      auto results = resolver.resolve(p.host, std::to_string(p.port), ec);
      if (ec || results.empty()) continue;
      ep = *results.begin();
    }
    std::make_shared<CertFetch>(io_, ep, [this](std::optional<LogCertificate> cert) {
      if (cert) consider(*cert);
    })->run(timeout);
  }
}

void NodeService::consider(const LogCertificate& cert) {
  if (!validate_certificate(cert, node_->registry(), static_cast<UnixMillis>(now_ms())).valid()) return;
  const auto mine = node_->state().log.epoch;
  if (cert.log.epoch <= mine || (adoptable_ && adoptable_->log.epoch >= cert.log.epoch)) return;
  if (node_->state().phase.kind == PhaseKind::collection) {
    node_->adopt(cert);
    {
      std::lock_guard lock(mu_);
      latest_ = cert;
      ++stats_.catchups;
    }
    persist();
  } else {
    adoptable_ = cert;
  }
}

void NodeService::load_state() {
  if (dep_.data_dir.empty()) return;
  const fs::path dir(dep_.data_dir);
  fs::create_directories(dir);
  if (auto bytes = read_file(dir / "cert.bin")) {
    try {
      Reader r(*bytes);
      auto cert = decode_certificate(r);
      r.expect_done();
      const auto verdict = validate_certificate(cert, node_->registry(), cert.log.expiration);
      // Our own snapshot may have expired while we were down; signatures still have to hold.
      if (verdict.valid() || verdict.status == CertStatus::expired) {
        node_->adopt(cert);
        latest_ = cert;
      }
    } catch (const DecodeError&) {
      // A torn snapshot is ignored; peers supply the log.
    }
  }
  if (auto bytes = read_file(dir / "pending.bin")) {
    try {
      Reader r(*bytes);
      auto pending = EntrySet::decode(r);
      for (const auto& e : pending) node_->collect(e);
    } catch (const DecodeError&) {
    }
  }
}

void NodeService::persist() {
  if (dep_.data_dir.empty()) return;
  const fs::path dir(dep_.data_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (latest_) write_file_atomic(dir / "cert.bin", encode_certificate(*latest_));
  EntrySet pending = node_->state().entries.minus(node_->state().log.entries);
  for (const auto& e : queued_) pending.insert(e);
  write_file_atomic(dir / "pending.bin", pending.encode());
}

}  // namespace logres::net
