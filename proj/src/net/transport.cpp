#include "logres/net/transport.hpp"

#include <deque>

namespace logres::net {

using steady = std::chrono::steady_clock;

namespace {

tcp::endpoint resolve(asio::io_context& io, const std::string& host, std::uint16_t port) {
  boost::system::error_code ec;
  auto addr = asio::ip::make_address(host, ec);
  if (!ec) return {addr, port};
  tcp::resolver resolver(io);
  auto results = resolver.resolve(host, std::to_string(port));
  if (results.empty()) throw std::runtime_error("cannot resolve " + host);
  return *results.begin();
}

}  // namespace

class Link : public std::enable_shared_from_this<Link> {
 public:
  Link(asio::io_context& io, tcp::endpoint ep, LinkParams params, std::shared_ptr<TransportStats> stats)
      : io_(io), ep_(ep), params_(params), stats_(std::move(stats)), socket_(io), timer_(io) {}

  void send(Bytes frame) {
    const auto now = steady::now();
    auto start = std::max(now, busy_until_);
    if (params_.bandwidth_bps > 0) {
      start += std::chrono::duration_cast<steady::duration>(
          std::chrono::duration<double>(static_cast<double>(frame.size()) * 8.0 / params_.bandwidth_bps));
    }
    busy_until_ = start;
    const auto due = start + std::chrono::duration_cast<steady::duration>(std::chrono::duration<double, std::milli>(params_.latency_ms));
    delayed_.emplace_back(due, std::move(frame));
    arm();
  }

  void close() {
    closed_ = true;
    timer_.cancel();
    boost::system::error_code ec;
    socket_.close(ec);
    delayed_.clear();
    ready_.clear();
  }

 private:
  void arm() {
    if (armed_ || delayed_.empty() || closed_) return;
    armed_ = true;
    timer_.expires_at(delayed_.front().first);
    timer_.async_wait([self = shared_from_this()](const boost::system::error_code& ec) {
      self->armed_ = false;
      if (ec || self->closed_) return;
      const auto now = steady::now();
      while (!self->delayed_.empty() && self->delayed_.front().first <= now) {
        self->ready_.push_back(std::move(self->delayed_.front().second));
        self->delayed_.pop_front();
      }
      self->flush();
      self->arm();
    });
  }

  void flush() {
    if (closed_ || ready_.empty()) return;
    if (!connected_) {
      connect();
      return;
    }
    if (writing_) return;
    writing_ = true;
    asio::async_write(socket_, asio::buffer(ready_.front()),
                      [self = shared_from_this()](const boost::system::error_code& ec, std::size_t n) {
                        self->writing_ = false;
                        if (self->closed_) return;
                        if (ec) {
                          self->reset();
                          return;
                        }
                        ++self->stats_->frames_out;
                        self->stats_->bytes_out += n;
                        self->ready_.pop_front();
                        self->flush();
                      });
  }

  void connect() {
    if (connecting_) return;
    connecting_ = true;
    socket_.async_connect(ep_, [self = shared_from_this()](const boost::system::error_code& ec) {
      self->connecting_ = false;
      if (self->closed_) return;
      if (ec) {
        // Peer unreachable: indistinguishable from a silent node.
        self->reset();
        return;
      }
      boost::system::error_code ignored;
      self->socket_.set_option(tcp::no_delay(true), ignored);
      self->connected_ = true;
      self->flush();
    });
  }

  void reset() {
    stats_->dropped_out += ready_.size();
    ready_.clear();
    connected_ = false;
    boost::system::error_code ignored;
    socket_.close(ignored);
    socket_ = tcp::socket(io_);
  }

  asio::io_context& io_;
  tcp::endpoint ep_;
  LinkParams params_;
  std::shared_ptr<TransportStats> stats_;
  tcp::socket socket_;
  asio::steady_timer timer_;
  steady::time_point busy_until_{};
  std::deque<std::pair<steady::time_point, Bytes>> delayed_;
  std::deque<Bytes> ready_;
  bool armed_ = false;
  bool connected_ = false;
  bool connecting_ = false;
  bool writing_ = false;
  bool closed_ = false;
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, FrameHandler handler, std::shared_ptr<TransportStats> stats)
      : socket_(std::move(socket)), handler_(std::move(handler)), stats_(std::move(stats)) {}

  void start() {
    boost::system::error_code ignored;
    socket_.set_option(tcp::no_delay(true), ignored);
    read_header();
  }

  void close() {
    boost::system::error_code ignored;
    socket_.close(ignored);
  }

 private:
  void read_header() {
    buf_.resize(4);
    asio::async_read(socket_, asio::buffer(buf_), [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
      if (ec) return;
      const auto len = wire::frame_length(self->buf_);
      if (len == 0 || len > wire::kMaxFrameLength) {
        ++self->stats_->bad_frames;
        self->close();
        return;
      }
      self->read_body(len);
    });
  }

  void read_body(std::uint32_t len) {
    buf_.resize(4 + static_cast<std::size_t>(len));
    asio::async_read(socket_, asio::buffer(buf_.data() + 4, len),
                     [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
                       if (ec) return;
                       std::optional<wire::Frame> frame;
                       try {
                         frame = wire::decode_frame(self->buf_);
                       } catch (const DecodeError&) {
                         // A corrupt frame is dropped whole and the stream can no longer be trusted.
                         ++self->stats_->bad_frames;
                         self->close();
                         return;
                       }
                       ++self->stats_->frames_in;
                       std::weak_ptr<Session> weak = self;
                       self->handler_(std::move(*frame), [weak](Bytes out) {
                         if (auto s = weak.lock()) s->write(std::move(out));
                       });
                       self->read_header();
                     });
  }

  void write(Bytes frame) {
    out_.push_back(std::move(frame));
    if (out_.size() == 1) write_next();
  }

  void write_next() {
    asio::async_write(socket_, asio::buffer(out_.front()), [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
      if (ec) {
        self->out_.clear();
        return;
      }
      self->out_.pop_front();
      if (!self->out_.empty()) self->write_next();
    });
  }

  tcp::socket socket_;
  FrameHandler handler_;
  std::shared_ptr<TransportStats> stats_;
  Bytes buf_;
  std::deque<Bytes> out_;
};

Transport::Transport(asio::io_context& io, const std::string& host, std::uint16_t port, LinkParams link)
    : io_(io), acceptor_(io), link_(link), stats_(std::make_shared<TransportStats>()) {
  const auto ep = resolve(io, host, port);
  acceptor_.open(ep.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(ep);
  acceptor_.listen();
}

Transport::~Transport() { stop(); }

void Transport::add_peer(NodeId id, const std::string& host, std::uint16_t port) {
  links_[id] = std::make_shared<Link>(io_, resolve(io_, host, port), link_, stats_);
}

void Transport::start(FrameHandler handler) {
  handler_ = std::move(handler);
  accept();
}

void Transport::accept() {
  acceptor_.async_accept([this](const boost::system::error_code& ec, tcp::socket socket) {
    if (stopped_) return;
    if (!ec) {
      auto s = std::make_shared<Session>(std::move(socket), handler_, stats_);
      std::erase_if(sessions_, [](const auto& w) { return w.expired(); });
      sessions_.push_back(s);
      s->start();
    }
    accept();
  });
}

void Transport::send(NodeId to, Bytes frame) {
  if (stopped_) return;
  auto it = links_.find(to);
  if (it == links_.end()) return;
  it->second->send(std::move(frame));
}

void Transport::stop() {
  if (stopped_) return;
  stopped_ = true;
  boost::system::error_code ignored;
  acceptor_.close(ignored);
  for (auto& [id, link] : links_) link->close();
  for (auto& w : sessions_) {
    if (auto s = w.lock()) s->close();
  }
}

std::uint16_t Transport::port() const { return acceptor_.local_endpoint().port(); }

}  // namespace logres::net
