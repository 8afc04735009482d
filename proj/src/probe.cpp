#include "uavnet/probe.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <random>
#include <stdexcept>
#include <system_error>
#include <thread>

namespace uavnet::probe {

namespace {

using Clock = std::chrono::steady_clock;

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    p[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

sockaddr_in resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const char* host = ep.host.empty() ? nullptr : ep.host.c_str();
  const std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(host, port.c_str(), &hints, &res); rc != 0 || res == nullptr) {
    throw std::runtime_error("cannot resolve '" + ep.to_string() + "': " + ::gai_strerror(rc));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  return addr;
}

void set_timeout(int fd, int option, double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(seconds);
  tv.tv_usec = static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
  ::setsockopt(fd, SOL_SOCKET, option, &tv, sizeof(tv));
}

const std::vector<std::uint8_t>& payload_block() {
  static const std::vector<std::uint8_t> block = [] {
    std::vector<std::uint8_t> b(64 * 1024);
    std::mt19937_64 gen(0x55415654);
    for (std::size_t i = 0; i + 8 <= b.size(); i += 8) put_u64(b.data() + i, gen());
    return b;
  }();
  return block;
}

bool send_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool recv_exact(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::recv(fd, data, len, 0);
    if (n == 0) return false;
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

double seconds_between(SteadyTime a, SteadyTime b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace

TimestampNs wall_clock_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------------------

std::array<std::uint8_t, kEchoPacketSize> encode(const EchoPacket& p) {
  std::array<std::uint8_t, kEchoPacketSize> out{};
  std::copy(kEchoMagic.begin(), kEchoMagic.end(), out.begin());
  out[4] = kEchoVersion;
  out[5] = static_cast<std::uint8_t>(p.kind);
  put_u64(out.data() + 6, p.seq);
  put_u64(out.data() + 14, p.client_ts_ns);
  return out;
}

std::optional<EchoPacket> decode_echo(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kEchoPacketSize) return std::nullopt;
  if (!std::equal(kEchoMagic.begin(), kEchoMagic.end(), bytes.begin())) return std::nullopt;
  if (bytes[4] != kEchoVersion || bytes[5] > 1) return std::nullopt;
  return EchoPacket{static_cast<EchoKind>(bytes[5]), get_u64(bytes.data() + 6),
                    get_u64(bytes.data() + 14)};
}

std::array<std::uint8_t, kThroughputHeaderSize> encode(const ThroughputHeader& h) {
  std::array<std::uint8_t, kThroughputHeaderSize> out{};
  std::copy(kThroughputMagic.begin(), kThroughputMagic.end(), out.begin());
  out[4] = static_cast<std::uint8_t>(h.direction);
  out[5] = static_cast<std::uint8_t>(h.duration_s >> 8);
  out[6] = static_cast<std::uint8_t>(h.duration_s & 0xff);
  return out;
}

std::optional<ThroughputHeader> decode_throughput_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kThroughputHeaderSize) return std::nullopt;
  if (!std::equal(kThroughputMagic.begin(), kThroughputMagic.end(), bytes.begin())) return std::nullopt;
  if (bytes[4] > 1) return std::nullopt;
  return ThroughputHeader{static_cast<Direction>(bytes[4]),
                          static_cast<std::uint16_t>((bytes[5] << 8) | bytes[6])};
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint '" + text + "' lacks ':port'");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(port, &used);
    if (used != port.size() || v > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("endpoint '" + text + "' has an invalid port");
  }
  return ep;
}

// ---------------------------------------------------------------------------

struct Server::Impl {
  Socket udp;
  Socket tcp;
  std::uint16_t port = 0;
  std::atomic<bool> running{false};
  std::atomic<std::uint64_t> echoed{0};
  std::atomic<std::uint64_t> malformed{0};
  std::thread udp_thread;
  std::thread accept_thread;
  std::mutex conn_mutex;
  std::vector<std::thread> connections;

  void udp_loop() {
    std::array<std::uint8_t, 2048> buf{};
    pollfd pfd{udp.get(), POLLIN, 0};
    while (running.load()) {
      if (::poll(&pfd, 1, 100) <= 0) continue;
      sockaddr_in peer{};
      socklen_t len = sizeof(peer);
      const ssize_t n = ::recvfrom(udp.get(), buf.data(), buf.size(), 0,
                                   reinterpret_cast<sockaddr*>(&peer), &len);
      if (n < 0) continue;
      auto pkt = decode_echo({buf.data(), static_cast<std::size_t>(n)});
      if (!pkt || pkt->kind != EchoKind::Request) {
        ++malformed;
        continue;
      }
      pkt->kind = EchoKind::Reply;
      const auto reply = encode(*pkt);
      // Count first so a client that has the reply also sees the count.
      ++echoed;
      ::sendto(udp.get(), reply.data(), reply.size(), 0, reinterpret_cast<sockaddr*>(&peer), len);
    }
  }

  void accept_loop() {
    pollfd pfd{tcp.get(), POLLIN, 0};
    while (running.load()) {
      if (::poll(&pfd, 1, 100) <= 0) continue;
      int fd = ::accept(tcp.get(), nullptr, nullptr);
      if (fd < 0) continue;
      std::lock_guard lock(conn_mutex);
      connections.emplace_back([this, fd] { serve_transfer(Socket(fd)); });
    }
  }

  void serve_transfer(Socket conn) {
    set_timeout(conn.get(), SO_RCVTIMEO, 5.0);
    std::array<std::uint8_t, kThroughputHeaderSize> raw{};
    if (!recv_exact(conn.get(), raw.data(), raw.size())) return;
    const auto header = decode_throughput_header(raw);
    if (!header) return;
    const auto deadline = Clock::now() + std::chrono::seconds(header->duration_s);

    if (header->direction == Direction::Down) {
      const auto& block = payload_block();
      while (running.load() && Clock::now() < deadline) {
        if (!send_all(conn.get(), block.data(), block.size())) return;
      }
      ::shutdown(conn.get(), SHUT_WR);
      return;
    }

    set_timeout(conn.get(), SO_RCVTIMEO, 0.2);
    std::vector<std::uint8_t> buf(64 * 1024);
    std::uint64_t total = 0;
    // Bounded by the announced duration plus a grace period for draining.
    const auto hard_stop = deadline + std::chrono::seconds(30);
    while (running.load() && Clock::now() < hard_stop) {
      const ssize_t n = ::recv(conn.get(), buf.data(), buf.size(), 0);
      if (n == 0) break;
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
        return;
      }
      total += static_cast<std::uint64_t>(n);
    }
    std::array<std::uint8_t, 8> ack{};
    put_u64(ack.data(), total);
    send_all(conn.get(), ack.data(), ack.size());
  }
};

Server::Server() : impl_(std::make_unique<Impl>()) {}

Server::~Server() { stop(); }

void Server::start(const Endpoint& bind_addr) {
  if (impl_->running.load()) throw std::logic_error("server already running");
  sockaddr_in addr = resolve(bind_addr, true);

  Socket udp(::socket(AF_INET, SOCK_DGRAM, 0));
  if (!udp) throw_errno("udp socket");
  if (::bind(udp.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    throw_errno("bind udp " + bind_addr.to_string());
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(udp.get(), reinterpret_cast<sockaddr*>(&bound), &len);
  addr.sin_port = bound.sin_port;

  Socket tcp(::socket(AF_INET, SOCK_STREAM, 0));
  if (!tcp) throw_errno("tcp socket");
  int one = 1;
  ::setsockopt(tcp.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(tcp.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    throw_errno("bind tcp " + bind_addr.to_string());
  }
  if (::listen(tcp.get(), 16) < 0) throw_errno("listen");

  impl_->udp = std::move(udp);
  impl_->tcp = std::move(tcp);
  impl_->port = ntohs(bound.sin_port);
  impl_->running = true;
  impl_->udp_thread = std::thread([this] { impl_->udp_loop(); });
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void Server::stop() {
  if (!impl_ || !impl_->running.exchange(false)) return;
  impl_->udp_thread.join();
  impl_->accept_thread.join();
  std::vector<std::thread> conns;
  {
    std::lock_guard lock(impl_->conn_mutex);
    conns.swap(impl_->connections);
  }
  for (auto& t : conns) t.join();
  impl_->udp.reset();
  impl_->tcp.reset();
}

std::uint16_t Server::port() const { return impl_->port; }
std::uint64_t Server::echoed() const { return impl_->echoed.load(); }
std::uint64_t Server::dropped_malformed() const { return impl_->malformed.load(); }

// ---------------------------------------------------------------------------

double EchoResult::delivery_pct() const {
  if (pkts_sent == 0) return 0.0;
  return 100.0 * static_cast<double>(pkts_delivered) / static_cast<double>(pkts_sent);
}

EchoResult echo_client(const Endpoint& server, const EchoOptions& opts) {
  if (!(opts.interval_s >= 0.0) || !(opts.timeout_s > 0.0)) {
    throw std::invalid_argument("echo_client: interval must be >= 0 and timeout > 0");
  }
  Socket sock(::socket(AF_INET, SOCK_DGRAM, 0));
  if (!sock) throw_errno("udp socket");
  const sockaddr_in dest = resolve(server, false);

  EchoResult result;
  result.records.reserve(opts.count);
  const auto interval = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(opts.interval_s));
  const auto timeout = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(opts.timeout_s));
  const auto start = Clock::now();
  std::size_t outstanding = 0;
  std::size_t oldest_pending = 0;  // records before this index are resolved or expired
  std::array<std::uint8_t, 2048> buf{};

  auto stop_requested = [&] { return opts.stop && opts.stop->load(); };

  while (true) {
    auto now = Clock::now();
    const bool more_to_send = result.records.size() < opts.count && !stop_requested();
    if (more_to_send) {
      const auto due = start + interval * static_cast<std::int64_t>(result.records.size());
      if (now >= due) {
        EchoRecord rec;
        rec.seq = result.records.size();
        rec.send_wall_ns = wall_clock_ns();
        const auto pkt = encode(EchoPacket{EchoKind::Request, rec.seq,
                                           static_cast<std::uint64_t>(rec.send_wall_ns)});
        rec.send_steady = Clock::now();
        ::sendto(sock.get(), pkt.data(), pkt.size(), 0,
                 reinterpret_cast<const sockaddr*>(&dest), sizeof(dest));
        result.records.push_back(rec);
        ++result.pkts_sent;
        ++outstanding;
        continue;
      }
    }

    while (oldest_pending < result.records.size() &&
           (result.records[oldest_pending].rtt_ms ||
            now - result.records[oldest_pending].send_steady > timeout)) {
      if (!result.records[oldest_pending].rtt_ms) --outstanding;
      ++oldest_pending;
    }
    if (!more_to_send && outstanding == 0) break;

    Clock::time_point wake = Clock::time_point::max();
    if (more_to_send) wake = start + interval * static_cast<std::int64_t>(result.records.size());
    if (oldest_pending < result.records.size()) {
      wake = std::min(wake, result.records[oldest_pending].send_steady + timeout);
    }
    const auto wait = std::max(Clock::duration::zero(), wake - now);
    timespec ts{};
    const auto wait_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(wait).count();
    ts.tv_sec = static_cast<time_t>(wait_ns / 1'000'000'000);
    ts.tv_nsec = static_cast<long>(wait_ns % 1'000'000'000);
    pollfd pfd{sock.get(), POLLIN, 0};
    if (::ppoll(&pfd, 1, &ts, nullptr) <= 0) continue;

    while (true) {
      const ssize_t n = ::recv(sock.get(), buf.data(), buf.size(), MSG_DONTWAIT);
      if (n < 0) break;
      const auto recv_time = Clock::now();
      const auto pkt = decode_echo({buf.data(), static_cast<std::size_t>(n)});
      if (!pkt || pkt->kind != EchoKind::Reply || pkt->seq >= result.records.size()) continue;
      auto& rec = result.records[pkt->seq];
      if (rec.rtt_ms) {
        ++result.duplicates;
        continue;
      }
      const auto flight = recv_time - rec.send_steady;
      if (flight > timeout) {
        ++result.late;
        continue;
      }
      if (pkt->seq < oldest_pending) continue;  // already expired
      rec.rtt_ms = std::chrono::duration<double, std::milli>(flight).count();
      ++result.pkts_delivered;
      --outstanding;
    }
  }
  return result;
}

ThroughputResult throughput_test(const Endpoint& server, Direction direction,
                                 std::uint16_t duration_s) {
  ThroughputResult r;
  r.direction = direction;
  r.start_wall_ns = wall_clock_ns();
  r.start_steady = Clock::now();
  r.end_steady = r.start_steady;

  auto fail = [&](const std::string& what) {
    r.partial = true;
    r.error = what + ": " + std::strerror(errno);
    r.end_steady = Clock::now();
    r.elapsed_s = seconds_between(r.start_steady, r.end_steady);
    r.mbps = r.elapsed_s > 0.0 ? 8.0 * static_cast<double>(r.bytes) / r.elapsed_s / 1e6 : 0.0;
    return r;
  };

  sockaddr_in dest{};
  try {
    dest = resolve(server, false);
  } catch (const std::exception& e) {
    r.partial = true;
    r.error = e.what();
    return r;
  }
  Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (!sock) return fail("socket");
  set_timeout(sock.get(), SO_SNDTIMEO, 5.0);
  if (::connect(sock.get(), reinterpret_cast<const sockaddr*>(&dest), sizeof(dest)) < 0) {
    return fail("connect " + server.to_string());
  }
  const auto header = encode(ThroughputHeader{direction, duration_s});
  if (!send_all(sock.get(), header.data(), header.size())) return fail("send header");

  const auto start = Clock::now();
  r.start_steady = start;
  const auto deadline = start + std::chrono::seconds(duration_s);

  if (direction == Direction::Down) {
    set_timeout(sock.get(), SO_RCVTIMEO, 0.1);
    std::vector<std::uint8_t> buf(64 * 1024);
    bool eof = false;
    while (Clock::now() < deadline) {
      const ssize_t n = ::recv(sock.get(), buf.data(), buf.size(), 0);
      if (n == 0) {
        eof = true;
        break;
      }
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
        return fail("recv");
      }
      r.bytes += static_cast<std::uint64_t>(n);
    }
    r.end_steady = Clock::now();
    r.elapsed_s = seconds_between(start, r.end_steady);
    if (eof && r.elapsed_s < 0.9 * duration_s) {
      r.partial = true;
      r.error = "stream ended early";
    }
  } else {
    const auto& block = payload_block();
    std::uint64_t sent = 0;
    while (Clock::now() < deadline) {
      const ssize_t n = ::send(sock.get(), block.data(), block.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
        r.bytes = sent;
        return fail("send");
      }
      sent += static_cast<std::uint64_t>(n);
    }
    ::shutdown(sock.get(), SHUT_WR);
    set_timeout(sock.get(), SO_RCVTIMEO, 30.0);
    std::array<std::uint8_t, 8> ack{};
    if (!recv_exact(sock.get(), ack.data(), ack.size())) {
      r.bytes = sent;
      return fail("no byte count from server");
    }
    r.bytes = get_u64(ack.data());
    r.end_steady = Clock::now();
    r.elapsed_s = seconds_between(start, r.end_steady);
  }

  r.mbps = r.elapsed_s > 0.0 ? 8.0 * static_cast<double>(r.bytes) / r.elapsed_s / 1e6 : 0.0;
  if (r.bytes == 0) {
    r.partial = true;
    if (r.error.empty()) r.error = "no data transferred";
  }
  return r;
}

// ---------------------------------------------------------------------------

std::vector<ProbeRecord> run_scheduler(const SchedulerConfig& cfg) {
  if (!(cfg.run_s > 0.0) || !(cfg.echo_interval_s > 0.0)) {
    throw std::invalid_argument("scheduler: run and echo interval must be positive");
  }
  if (!(cfg.throughput_every_s >= 0.0)) {
    throw std::invalid_argument("scheduler: throughput period must be >= 0");
  }

  EchoOptions eo;
  eo.count = static_cast<std::uint64_t>(std::llround(cfg.run_s / cfg.echo_interval_s));
  eo.interval_s = cfg.echo_interval_s;
  eo.timeout_s = cfg.echo_timeout_s;
  eo.stop = cfg.stop;

  struct Transfer {
    TimestampNs start_wall = 0;
    SteadyTime begin{};
    SteadyTime end{};
    ThroughputResult down;
    ThroughputResult up;
  };

  EchoResult echoes;
  std::vector<Transfer> transfers;
  std::mutex transfers_mutex;
  const auto start = Clock::now();

  std::thread echo_thread([&] { echoes = echo_client(cfg.server, eo); });
  std::thread bulk_thread;
  if (cfg.throughput_every_s > 0.0) {
    bulk_thread = std::thread([&] {
      const auto every = std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(cfg.throughput_every_s));
      const auto run_end = start + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(cfg.run_s));
      for (std::int64_t k = 0;; ++k) {
        const auto due = start + every * k;
        if (due >= run_end) break;
        while (Clock::now() < due) {
          if (cfg.stop && cfg.stop->load()) return;
          std::this_thread::sleep_for(std::min<Clock::duration>(due - Clock::now(),
                                                                std::chrono::milliseconds(20)));
        }
        if (cfg.stop && cfg.stop->load()) return;
        Transfer t;
        t.start_wall = wall_clock_ns();
        t.begin = Clock::now();
        t.down = throughput_test(cfg.server, Direction::Down, cfg.throughput_duration_s);
        t.up = throughput_test(cfg.server, Direction::Up, cfg.throughput_duration_s);
        t.end = Clock::now();
        std::lock_guard lock(transfers_mutex);
        transfers.push_back(std::move(t));
      }
    });
  }
  echo_thread.join();
  if (bulk_thread.joinable()) bulk_thread.join();

  std::vector<ProbeRecord> out;
  const auto timeout = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(cfg.echo_timeout_s));
  for (const auto& e : echoes.records) {
    ProbeRecord rec;
    rec.kind = RecordKind::Echo;
    rec.t_wall_ns = e.send_wall_ns;
    rec.seq = e.seq;
    rec.rtt_ms = e.rtt_ms;
    const auto flight_end =
        e.rtt_ms ? e.send_steady + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double, std::milli>(*e.rtt_ms))
                 : e.send_steady + timeout;
    for (const auto& t : transfers) {
      if (e.send_steady <= t.end && flight_end >= t.begin) rec.transfer_overlap = true;
    }
    out.push_back(rec);
  }
  for (auto& t : transfers) {
    ProbeRecord rec;
    rec.kind = RecordKind::Throughput;
    rec.t_wall_ns = t.start_wall;
    rec.downlink = std::move(t.down);
    rec.uplink = std::move(t.up);
    out.push_back(std::move(rec));
  }
  std::stable_sort(out.begin(), out.end(), [](const ProbeRecord& a, const ProbeRecord& b) {
    return a.t_wall_ns < b.t_wall_ns;
  });
  return out;
}

FlightDataset records_to_dataset(const std::vector<ProbeRecord>& records,
                                 const GeoPosition& position, std::string flight_id,
                                 LinkType link) {
  FlightDataset ds;
  ds.flight_id = std::move(flight_id);
  std::vector<const ProbeRecord*> bulk;
  for (const auto& r : records) {
    if (r.kind == RecordKind::Throughput) {
      bulk.push_back(&r);
      continue;
    }
    Sample s;
    s.timestamp = r.t_wall_ns;
    s.position = position;
    s.link = link;
    E2EMetrics e;
    e.rtt_ms = r.rtt_ms;
    e.pkts_sent = 1;
    e.pkts_delivered = r.rtt_ms ? 1 : 0;
    s.e2e = e;
    ds.samples.push_back(std::move(s));
  }
  std::stable_sort(ds.samples.begin(), ds.samples.end(),
                   [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });

  for (const auto* r : bulk) {
    auto it = std::upper_bound(ds.samples.begin(), ds.samples.end(), r->t_wall_ns,
                               [](TimestampNs t, const Sample& s) { return t < s.timestamp; });
    Sample* target = nullptr;
    if (it != ds.samples.begin()) {
      target = &*std::prev(it);
      if (target->e2e->dl_throughput_mbps || target->e2e->ul_throughput_mbps) target = nullptr;
    }
    if (!target) {
      Sample s;
      s.timestamp = r->t_wall_ns;
      s.position = position;
      s.link = link;
      s.e2e = E2EMetrics{};
      it = ds.samples.insert(it, std::move(s));
      target = &*it;
    }
    if (r->downlink) target->e2e->dl_throughput_mbps = r->downlink->mbps;
    if (r->uplink) target->e2e->ul_throughput_mbps = r->uplink->mbps;
  }
  return ds;
}

}  // namespace uavnet::probe
