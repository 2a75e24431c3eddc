#include "logres/net/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace logres::net {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_num(std::string_view s, std::string_view what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument("bad " + std::string(what) + ": " + std::string(s));
  }
  return v;
}

double parse_double(std::string_view s, std::string_view what) {
  // from_chars for double is missing in older libstdc++.
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
    throw std::invalid_argument("bad " + std::string(what) + ": " + tmp);
  }
  return v;
}

}  // namespace

std::string_view to_string(ByzantineMode m) {
  switch (m) {
    case ByzantineMode::none: return "none";
    case ByzantineMode::padding: return "padding";
  }
  return "?";
}

ByzantineMode byzantine_from_string(std::string_view s) {
  if (s == "none") return ByzantineMode::none;
  if (s == "padding") return ByzantineMode::padding;
  throw std::invalid_argument("unknown byzantine mode: " + std::string(s));
}

std::pair<std::string, std::uint16_t> parse_address(std::string_view s) {
  const auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw std::invalid_argument("address must be host:port: " + std::string(s));
  return {std::string(s.substr(0, colon)), parse_num<std::uint16_t>(s.substr(colon + 1), "port")};
}

const Peer& Deployment::peer(NodeId id) const {
  for (const auto& p : nodes) {
    if (p.id == id) return p;
  }
  throw std::out_of_range("no such node: " + to_string(id));
}

KeyPair Deployment::key() const {
  auto kp = keypair_from_secret(self, scheme, secret_key);
  if (kp.public_key != peer(self).public_key) throw std::invalid_argument("secret_key does not match this node's public key");
  return kp;
}

std::shared_ptr<const PublicRegistry> Deployment::registry() const {
  std::vector<Bytes> keys(nodes.size());
  for (const auto& p : nodes) keys.at(p.id.value) = p.public_key;
  return std::make_shared<const PublicRegistry>(scheme, std::move(keys), f);
}

void Deployment::validate() const {
  if (nodes.empty()) throw std::invalid_argument("no nodes configured");
  std::set<std::pair<std::string, std::uint16_t>> addrs;
  std::vector<bool> seen(nodes.size(), false);
  for (const auto& p : nodes) {
    if (p.id.value >= nodes.size() || seen[p.id.value]) throw std::invalid_argument("node ids must be 0..n-1, each once");
    seen[p.id.value] = true;
    if (!addrs.insert({p.host, p.port}).second) throw std::invalid_argument("duplicate node address " + p.host + ":" + std::to_string(p.port));
    if (p.public_key.empty()) throw std::invalid_argument("missing public key for " + to_string(p.id));
  }
  if (self.value >= nodes.size()) throw std::invalid_argument("self is not a configured node");
  if (nodes.size() <= 2u * f) throw std::invalid_argument("deployment requires n > 2f");
  if (round_ms <= 0) throw std::invalid_argument("round_ms must be positive");
  if (static_cast<double>(period_ms) < protocol_ms()) throw std::invalid_argument("period_ms must be at least (f+2) * round_ms");
  if (max_entry == 0 || max_entry > kHardMaxEntrySize) throw std::invalid_argument("max_entry out of range");
  if (link_latency_ms < 0 || bandwidth_bps < 0) throw std::invalid_argument("link parameters must not be negative");
  (void)key();
}

Deployment parse_deployment(std::string_view text) {
  Deployment d;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "self") d.self = NodeId{parse_num<std::uint16_t>(value, key)};
      else if (key == "f") d.f = parse_num<std::uint16_t>(value, key);
      else if (key == "period_ms") d.period_ms = parse_num<Millis>(value, key);
      else if (key == "round_ms") d.round_ms = parse_double(value, key);
      else if (key == "max_entry") d.max_entry = parse_num<std::size_t>(value, key);
      else if (key == "data_dir") d.data_dir = std::string(value);
      else if (key == "start_ms") d.start_ms = parse_num<UnixMillis>(value, key);
      else if (key == "secret_key") d.secret_key = from_hex(value);
      else if (key == "scheme") d.scheme = scheme_from_string(value);
      else if (key == "link_latency_ms") d.link_latency_ms = parse_double(value, key);
      else if (key == "bandwidth_bps") d.bandwidth_bps = parse_double(value, key);
      else if (key == "byzantine") d.byzantine = byzantine_from_string(value);
      else if (key == "padding_values") d.padding_values = parse_num<std::size_t>(value, key);
      else if (key == "node") {
        std::istringstream fields{std::string(value)};
        std::string id, addr, pk, extra;
        if (!(fields >> id >> addr >> pk) || (fields >> extra)) throw std::invalid_argument("node needs: id host:port pubkey");
        auto [host, port] = parse_address(addr);
        d.nodes.push_back(Peer{NodeId{parse_num<std::uint16_t>(id, "node id")}, host, port, from_hex(pk)});
      } else {
        throw std::invalid_argument("unknown key: " + std::string(key));
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DecodeError& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return d;
}

Deployment load_deployment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto d = parse_deployment(buf.str());
  if (const char* dir = std::getenv("LOGRES_DATA_DIR"); dir && *dir) d.data_dir = dir;
  return d;
}

std::string format_deployment(const Deployment& d) {
  std::ostringstream out;
  out << "self = " << d.self.value << "\n";
  out << "f = " << d.f << "\n";
  out << "period_ms = " << d.period_ms << "\n";
  out << "round_ms = " << d.round_ms << "\n";
  out << "max_entry = " << d.max_entry << "\n";
  if (!d.data_dir.empty()) out << "data_dir = " << d.data_dir << "\n";
  out << "start_ms = " << d.start_ms << "\n";
  out << "scheme = " << to_string(d.scheme) << "\n";
  out << "secret_key = " << to_hex(d.secret_key) << "\n";
  for (const auto& p : d.nodes) out << "node = " << p.id.value << " " << p.host << ":" << p.port << " " << to_hex(p.public_key) << "\n";
  out << "link_latency_ms = " << d.link_latency_ms << "\n";
  out << "bandwidth_bps = " << d.bandwidth_bps << "\n";
  out << "byzantine = " << to_string(d.byzantine) << "\n";
  return out.str();
}

LatencyBound lower_bound_latency(std::uint16_t f, const NetParams& p) {
  if (p.link_latency_ms < 0 || p.bandwidth_bps <= 0) throw std::invalid_argument("link latency must be >= 0 and bandwidth > 0");
  LatencyBound b;
  const double serialize_ms = std::isinf(p.bandwidth_bps) ? 0.0 : static_cast<double>(p.entry_size) * 8.0 / p.bandwidth_bps * 1000.0;
  b.round_ms = p.link_latency_ms + serialize_ms;
  const double rounds = static_cast<double>(f) + 2;
  b.total_ms = rounds * b.round_ms;
  b.reference_total_ms = rounds * kReferenceRoundMs;
  return b;
}

}  // namespace logres::net
