#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavnet/telemetry.hpp"

namespace uavnet::probe {

// ---------------------------------------------------------------------------
// Wire formats (big-endian)

// "UAVP" | version=1 | kind (0 request, 1 reply) | seq u64 | client_ts_ns u64
inline constexpr std::size_t kEchoPacketSize = 22;
inline constexpr std::array<std::uint8_t, 4> kEchoMagic = {'U', 'A', 'V', 'P'};
inline constexpr std::uint8_t kEchoVersion = 1;

enum class EchoKind : std::uint8_t { Request = 0, Reply = 1 };

struct EchoPacket {
  EchoKind kind = EchoKind::Request;
  std::uint64_t seq = 0;
  std::uint64_t client_ts_ns = 0;

  bool operator==(const EchoPacket&) const = default;
};

std::array<std::uint8_t, kEchoPacketSize> encode(const EchoPacket& p);
// nullopt for wrong length, magic, version or kind.
std::optional<EchoPacket> decode_echo(std::span<const std::uint8_t> bytes);

// "UAVT" | direction (0 down = server sends, 1 up = client sends) | duration_s u16
inline constexpr std::size_t kThroughputHeaderSize = 7;
inline constexpr std::array<std::uint8_t, 4> kThroughputMagic = {'U', 'A', 'V', 'T'};

enum class Direction : std::uint8_t { Down = 0, Up = 1 };

struct ThroughputHeader {
  Direction direction = Direction::Down;
  std::uint16_t duration_s = 5;

  bool operator==(const ThroughputHeader&) const = default;
};

std::array<std::uint8_t, kThroughputHeaderSize> encode(const ThroughputHeader& h);
std::optional<ThroughputHeader> decode_throughput_header(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Endpoints

// "host:port" (IPv4 or resolvable name). Port 0 is allowed for binding.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const;
};

Endpoint parse_endpoint(const std::string& text);

// ---------------------------------------------------------------------------
// Server

// UDP echo responder plus TCP throughput responder on the same port number.
class Server {
 public:
  Server();
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts background threads. Throws std::system_error when the
  // address cannot be bound.
  void start(const Endpoint& bind_addr);
  // Cooperative stop; joins all threads. Idempotent.
  void stop();

  // Actual bound port (useful after binding port 0).
  std::uint16_t port() const;
  std::uint64_t echoed() const;
  std::uint64_t dropped_malformed() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Client side

using SteadyTime = std::chrono::steady_clock::time_point;

struct EchoOptions {
  std::uint64_t count = 10;
  double interval_s = 1.0;
  double timeout_s = 2.0;
  // Checked between sends; when set, sending stops and in-flight requests are
  // drained up to the timeout.
  const std::atomic<bool>* stop = nullptr;
};

struct EchoRecord {
  std::uint64_t seq = 0;
  TimestampNs send_wall_ns = 0;
  SteadyTime send_steady{};
  std::optional<double> rtt_ms;  // nullopt = lost or late
};

struct EchoResult {
  std::vector<EchoRecord> records;
  std::uint64_t pkts_sent = 0;
  std::uint64_t pkts_delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t late = 0;

  // Percentage of requests answered in time; 0 when nothing was sent.
  double delivery_pct() const;
};

// Throws std::system_error when the socket cannot be created.
EchoResult echo_client(const Endpoint& server, const EchoOptions& opts);

struct ThroughputResult {
  Direction direction = Direction::Down;
  double mbps = 0.0;
  std::uint64_t bytes = 0;
  double elapsed_s = 0.0;
  // Connection refused/reset, early end of stream or nothing transferred.
  bool partial = false;
  std::string error;
  TimestampNs start_wall_ns = 0;
  SteadyTime start_steady{};
  SteadyTime end_steady{};
};

// Never throws for network failures; they surface as partial results.
ThroughputResult throughput_test(const Endpoint& server, Direction direction,
                                 std::uint16_t duration_s = 5);

// ---------------------------------------------------------------------------
// Scheduler

struct SchedulerConfig {
  Endpoint server;
  double run_s = 60.0;
  double echo_interval_s = 1.0;
  double echo_timeout_s = 2.0;
  // 0 disables throughput runs.
  double throughput_every_s = 60.0;
  std::uint16_t throughput_duration_s = 5;
  const std::atomic<bool>* stop = nullptr;
};

enum class RecordKind { Echo, Throughput };

struct ProbeRecord {
  RecordKind kind = RecordKind::Echo;
  TimestampNs t_wall_ns = 0;  // probe start
  // Echo fields
  std::uint64_t seq = 0;
  std::optional<double> rtt_ms;
  // Set on echoes whose flight time overlapped an active bulk transfer.
  bool transfer_overlap = false;
  // Throughput fields
  std::optional<ThroughputResult> downlink;
  std::optional<ThroughputResult> uplink;
};

// Runs echo and throughput probes concurrently for run_s and returns the
// records ordered by start time.
std::vector<ProbeRecord> run_scheduler(const SchedulerConfig& cfg);

// Telemetry rows for the records: one sample per echo (E2E columns only);
// throughput results are merged into the latest echo sample that started at
// or before them, or get their own sample when none exists.
FlightDataset records_to_dataset(const std::vector<ProbeRecord>& records,
                                 const GeoPosition& position = {}, std::string flight_id = "probe",
                                 LinkType link = LinkType::Cellular);

TimestampNs wall_clock_ns();

}  // namespace uavnet::probe
