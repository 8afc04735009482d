#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uavnet {

using CellId = std::int64_t;
using TimestampNs = std::int64_t;

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kDefaultGroundElevationM = 240.0;
inline constexpr std::size_t kMaxNeighbors = 3;

enum class LinkType { Cellular, Satellite };

std::string_view to_string(LinkType link);
LinkType parse_link(std::string_view text);

struct GeoPosition {
  double latitude = 0.0;   // degrees WGS84
  double longitude = 0.0;  // degrees WGS84
  double altitude_asl = 0.0;

  bool operator==(const GeoPosition&) const = default;
};

struct CellObservation {
  std::optional<CellId> cell_id;
  std::optional<std::int32_t> pci;
  std::optional<std::int64_t> tac;
  std::optional<double> rsrp;  // dBm
  std::optional<double> rsrq;  // dB
  std::optional<double> rssi;  // dBm
  std::optional<double> sinr;  // dB

  bool operator==(const CellObservation&) const = default;
};

struct E2EMetrics {
  std::optional<double> rtt_ms;
  std::optional<double> dl_throughput_mbps;
  std::optional<double> ul_throughput_mbps;
  std::optional<std::int64_t> pkts_sent;
  std::optional<std::int64_t> pkts_delivered;

  bool operator==(const E2EMetrics&) const = default;
};

struct FlightState {
  double speed_mps = 0.0;
  double heading_deg = 0.0;
  double roll_deg = 0.0;
  double pitch_deg = 0.0;

  bool operator==(const FlightState&) const = default;
};

struct Sample {
  TimestampNs timestamp = 0;
  GeoPosition position;
  std::optional<FlightState> flight;
  std::optional<CellObservation> serving;
  std::vector<CellObservation> neighbors;  // at most 3, strongest first
  std::optional<E2EMetrics> e2e;
  LinkType link = LinkType::Cellular;

  bool operator==(const Sample&) const = default;
};

struct FlightDataset {
  std::string flight_id;
  std::vector<Sample> samples;
  double nominal_period_s = 1.0;

  bool operator==(const FlightDataset&) const = default;
};

// Stable sort by descending rsrp with null rsrp last, then truncation to three.
void normalize_neighbors(std::vector<CellObservation>& neighbors);

// Serving cell id, or nullopt when the sample has no serving observation.
std::optional<CellId> serving_cell(const Sample& s);

// Strongest neighbor rsrp (max over non-null values).
std::optional<double> strongest_neighbor_rsrp(const Sample& s);

// ---------------------------------------------------------------------------
// Metric access

enum class Metric { Rsrp, Rsrq, Rssi, Sinr, Rtt, Downlink, Uplink };

inline constexpr Metric kRadioMetrics[] = {Metric::Rsrp, Metric::Rsrq, Metric::Rssi,
                                           Metric::Sinr};
inline constexpr Metric kE2EMetrics[] = {Metric::Rtt, Metric::Downlink, Metric::Uplink};

std::string_view to_string(Metric m);
std::string_view unit_of(Metric m);
Metric parse_metric(std::string_view text);

// Serving-cell radio value or E2E value; nullopt when absent.
std::optional<double> metric_value(const Sample& s, Metric m);

std::vector<std::optional<double>> metric_series(const FlightDataset& ds, Metric m);

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind { NullValue, OutOfRange, TimestampRegression, NeighborOrder, Consistency };

std::string_view to_string(ViolationKind k);

struct Violation {
  std::size_t index = 0;
  std::string field;
  ViolationKind kind = ViolationKind::OutOfRange;
  std::string detail;
};

struct ValidationReport {
  std::size_t sample_count = 0;
  std::vector<Violation> violations;
  std::size_t range_violations = 0;
  std::size_t timestamp_regressions = 0;
  std::size_t consistency_violations = 0;
  std::size_t null_serving_cell = 0;
  double serving_null_fraction = 0.0;
  // Set when the serving cell-id null fraction exceeds 0.1%.
  bool null_warning = false;
  // Set when it reaches 1% (dataset no longer trustworthy for handover detection).
  bool null_error = false;

  // True when no range, ordering or consistency violation was found and the
  // null fraction is below the error threshold.
  bool ok() const;
};

inline constexpr double kNullWarnFraction = 0.001;
inline constexpr double kNullErrorFraction = 0.01;

ValidationReport validate_dataset(const FlightDataset& ds);

// ---------------------------------------------------------------------------
// Local coordinates

struct LocalPoint {
  double x_m = 0.0;
  double y_m = 0.0;
  double alt_m = 0.0;
};

struct ProjectionOrigin {
  double lat0 = 0.0;
  double lon0 = 0.0;
};

ProjectionOrigin centroid(const FlightDataset& ds);

LocalPoint project(const GeoPosition& p, const ProjectionOrigin& origin);

// Equirectangular projection about the dataset centroid. Throws on empty input.
std::vector<LocalPoint> local_projection(const FlightDataset& ds);
std::vector<LocalPoint> local_projection(const FlightDataset& ds, const ProjectionOrigin& origin);

double haversine_m(const GeoPosition& a, const GeoPosition& b);

inline double altitude_agl(const GeoPosition& p,
                           double ground_elevation_m = kDefaultGroundElevationM) {
  return p.altitude_asl - ground_elevation_m;
}

}  // namespace uavnet
