#include "logres/net/client.hpp"

#include <stdexcept>

#include "logres/net/config.hpp"
#include "logres/net/transport.hpp"

namespace logres::net {

namespace {

using steady = std::chrono::steady_clock;

class Connection {
 public:
  Connection(const Endpoint& ep, std::chrono::milliseconds timeout) : socket_(io_), deadline_(steady::now() + timeout) {
    tcp::resolver resolver(io_);
    boost::system::error_code ec;
    auto results = resolver.resolve(ep.host, std::to_string(ep.port), ec);
    if (ec || results.empty()) throw std::runtime_error("cannot resolve " + to_string(ep));
    await([&](boost::system::error_code& out) {
      asio::async_connect(socket_, results, [&out](const boost::system::error_code& e, const tcp::endpoint&) { out = e; });
    });
    socket_.set_option(tcp::no_delay(true), ec);
  }

  void write(const Bytes& data) {
    await([&](boost::system::error_code& out) {
      asio::async_write(socket_, asio::buffer(data), [&out](const boost::system::error_code& e, std::size_t) { out = e; });
    });
  }

  wire::Frame read() {
    Bytes buf(4);
    await([&](boost::system::error_code& out) {
      asio::async_read(socket_, asio::buffer(buf), [&out](const boost::system::error_code& e, std::size_t) { out = e; });
    });
    const auto len = wire::frame_length(buf);
    if (len == 0 || len > wire::kMaxFrameLength) throw DecodeError("bad frame length");
    buf.resize(4 + static_cast<std::size_t>(len));
    await([&](boost::system::error_code& out) {
      asio::async_read(socket_, asio::buffer(buf.data() + 4, len), [&out](const boost::system::error_code& e, std::size_t) { out = e; });
    });
    return wire::decode_frame(buf);
  }

 private:
  template <typename Start>
  void await(Start start) {
    boost::system::error_code result = asio::error::would_block;
    start(result);
    io_.restart();
    io_.run_until(deadline_);
    if (result == asio::error::would_block) {
      boost::system::error_code ignored;
      socket_.close(ignored);
      io_.restart();
      io_.run();
      throw std::runtime_error("timed out");
    }
    if (result) throw std::runtime_error(result.message());
  }

  asio::io_context io_;
  tcp::socket socket_;
  steady::time_point deadline_;
};

wire::SubmitStatus decode_ack(const wire::Frame& f) {
  if (f.type != wire::FrameType::submit_ack || f.body.size() != 1 || f.body[0] > 3) throw DecodeError("malformed submit ack");
  return static_cast<wire::SubmitStatus>(f.body[0]);
}

}  // namespace

Endpoint parse_endpoint(std::string_view s) {
  auto [host, port] = parse_address(s);
  return Endpoint{host, port};
}

std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

std::vector<std::optional<wire::SubmitStatus>> Client::submit(const Entry& entry, const std::vector<Endpoint>& nodes) const {
  std::vector<std::optional<wire::SubmitStatus>> out;
  const auto frame = wire::encode_frame(wire::FrameType::client_submit, entry.bytes());
  for (const auto& ep : nodes) {
    try {
      Connection c(ep, timeout_);
      c.write(frame);
      out.push_back(decode_ack(c.read()));
    } catch (const std::exception&) {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

std::vector<wire::SubmitStatus> Client::submit_batch(const std::vector<Entry>& entries, const Endpoint& node) const {
  Connection c(node, timeout_);
  Bytes all;
  for (const auto& e : entries) {
    const auto frame = wire::encode_frame(wire::FrameType::client_submit, e.bytes());
    all.insert(all.end(), frame.begin(), frame.end());
  }
  c.write(all);
  std::vector<wire::SubmitStatus> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) out.push_back(decode_ack(c.read()));
  return out;
}

std::optional<LogCertificate> Client::get_certificate(const Endpoint& node) const {
  Connection c(node, timeout_);
  c.write(wire::encode_frame(wire::FrameType::certificate_request, {}));
  const auto f = c.read();
  if (f.type != wire::FrameType::certificate_response) throw DecodeError("unexpected reply");
  return wire::decode_certificate_response(f.body);
}

}  // namespace logres::net
