#include "uavnet/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace uavnet {

std::string_view to_string(LinkType link) {
  return link == LinkType::Cellular ? "cellular" : "satellite";
}

LinkType parse_link(std::string_view text) {
  if (text == "cellular") return LinkType::Cellular;
  if (text == "satellite") return LinkType::Satellite;
  throw std::invalid_argument("unknown link type '" + std::string(text) + "'");
}

void normalize_neighbors(std::vector<CellObservation>& neighbors) {
  std::stable_sort(neighbors.begin(), neighbors.end(),
                   [](const CellObservation& a, const CellObservation& b) {
                     if (!a.rsrp) return false;
                     if (!b.rsrp) return true;
                     return *a.rsrp > *b.rsrp;
                   });
  if (neighbors.size() > kMaxNeighbors) neighbors.resize(kMaxNeighbors);
}

std::optional<CellId> serving_cell(const Sample& s) {
  if (!s.serving) return std::nullopt;
  return s.serving->cell_id;
}

std::optional<double> strongest_neighbor_rsrp(const Sample& s) {
  std::optional<double> best;
  for (const auto& nb : s.neighbors) {
    if (nb.rsrp && (!best || *nb.rsrp > *best)) best = nb.rsrp;
  }
  return best;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Rsrp: return "rsrp";
    case Metric::Rsrq: return "rsrq";
    case Metric::Rssi: return "rssi";
    case Metric::Sinr: return "sinr";
    case Metric::Rtt: return "rtt";
    case Metric::Downlink: return "dl";
    case Metric::Uplink: return "ul";
  }
  return "?";
}

std::string_view unit_of(Metric m) {
  switch (m) {
    case Metric::Rsrp:
    case Metric::Rssi: return "dBm";
    case Metric::Rsrq:
    case Metric::Sinr: return "dB";
    case Metric::Rtt: return "ms";
    case Metric::Downlink:
    case Metric::Uplink: return "Mbit/s";
  }
  return "";
}

Metric parse_metric(std::string_view text) {
  for (Metric m : {Metric::Rsrp, Metric::Rsrq, Metric::Rssi, Metric::Sinr, Metric::Rtt,
                   Metric::Downlink, Metric::Uplink}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown metric '" + std::string(text) + "'");
}

std::optional<double> metric_value(const Sample& s, Metric m) {
  switch (m) {
    case Metric::Rsrp: return s.serving ? s.serving->rsrp : std::nullopt;
    case Metric::Rsrq: return s.serving ? s.serving->rsrq : std::nullopt;
    case Metric::Rssi: return s.serving ? s.serving->rssi : std::nullopt;
    case Metric::Sinr: return s.serving ? s.serving->sinr : std::nullopt;
    case Metric::Rtt: return s.e2e ? s.e2e->rtt_ms : std::nullopt;
    case Metric::Downlink: return s.e2e ? s.e2e->dl_throughput_mbps : std::nullopt;
    case Metric::Uplink: return s.e2e ? s.e2e->ul_throughput_mbps : std::nullopt;
  }
  return std::nullopt;
}

std::vector<std::optional<double>> metric_series(const FlightDataset& ds, Metric m) {
  std::vector<std::optional<double>> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(metric_value(s, m));
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::NullValue: return "null";
    case ViolationKind::OutOfRange: return "range";
    case ViolationKind::TimestampRegression: return "timestamp";
    case ViolationKind::NeighborOrder: return "neighbor_order";
    case ViolationKind::Consistency: return "consistency";
  }
  return "?";
}

bool ValidationReport::ok() const {
  return range_violations == 0 && timestamp_regressions == 0 && consistency_violations == 0 &&
         !null_error;
}

namespace {

struct Range {
  double lo;
  double hi;
};

constexpr Range kRsrp{-156.0, -31.0};
constexpr Range kRsrq{-34.0, 3.0};
constexpr Range kRssi{-120.0, -10.0};
constexpr Range kSinr{-23.0, 40.0};

class Checker {
 public:
  explicit Checker(ValidationReport& r) : report_(r) {}

  void range(std::size_t i, const std::string& field, std::optional<double> v, Range r) {
    if (!v) return;
    if (!std::isfinite(*v) || *v < r.lo || *v > r.hi) {
      std::ostringstream os;
      os << field << "=" << *v << " outside [" << r.lo << ", " << r.hi << "]";
      add(i, field, ViolationKind::OutOfRange, os.str());
    }
  }

  void add(std::size_t i, const std::string& field, ViolationKind kind, std::string detail) {
    switch (kind) {
      case ViolationKind::OutOfRange: ++report_.range_violations; break;
      case ViolationKind::TimestampRegression: ++report_.timestamp_regressions; break;
      case ViolationKind::NeighborOrder:
      case ViolationKind::Consistency: ++report_.consistency_violations; break;
      case ViolationKind::NullValue: break;
    }
    report_.violations.push_back({i, field, kind, std::move(detail)});
  }

  void cell(std::size_t i, const std::string& prefix, const CellObservation& c) {
    range(i, prefix + "_rsrp", c.rsrp, kRsrp);
    range(i, prefix + "_rsrq", c.rsrq, kRsrq);
    range(i, prefix + "_rssi", c.rssi, kRssi);
    range(i, prefix + "_sinr", c.sinr, kSinr);
    if (c.pci && (*c.pci < 0 || *c.pci > 503)) {
      add(i, prefix + "_pci", ViolationKind::OutOfRange,
          "pci=" + std::to_string(*c.pci) + " outside [0, 503]");
    }
  }

 private:
  ValidationReport& report_;
};

}  // namespace

ValidationReport validate_dataset(const FlightDataset& ds) {
  ValidationReport report;
  report.sample_count = ds.samples.size();
  Checker check(report);

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    const auto& p = s.position;
    check.range(i, "lat", p.latitude, {-90.0, 90.0});
    check.range(i, "lon", p.longitude, {-180.0, 180.0});
    if (!std::isfinite(p.altitude_asl)) {
      check.add(i, "alt_asl_m", ViolationKind::OutOfRange, "altitude not finite");
    }
    if (i > 0 && s.timestamp <= ds.samples[i - 1].timestamp) {
      check.add(i, "ts_ns", ViolationKind::TimestampRegression,
                "ts " + std::to_string(s.timestamp) + " <= previous " +
                    std::to_string(ds.samples[i - 1].timestamp));
    }
    if (s.flight) {
      if (!(s.flight->speed_mps >= 0.0)) {
        check.add(i, "speed_mps", ViolationKind::OutOfRange, "negative speed");
      }
      check.range(i, "heading_deg", s.flight->heading_deg, {0.0, 360.0});
      if (s.flight->heading_deg == 360.0) {
        check.add(i, "heading_deg", ViolationKind::OutOfRange, "heading must be < 360");
      }
    }

    if (s.serving) check.cell(i, "srv", *s.serving);
    if (!serving_cell(s) && s.link == LinkType::Cellular) {
      ++report.null_serving_cell;
      report.violations.push_back({i, "srv_cell_id", ViolationKind::NullValue, "null serving cell"});
    }

    if (s.neighbors.size() > kMaxNeighbors) {
      check.add(i, "neighbors", ViolationKind::Consistency, "more than 3 neighbors");
    }
    for (std::size_t k = 0; k < s.neighbors.size(); ++k) {
      check.cell(i, "nb" + std::to_string(k + 1), s.neighbors[k]);
      if (k > 0) {
        const auto& prev = s.neighbors[k - 1].rsrp;
        const auto& cur = s.neighbors[k].rsrp;
        if ((!prev && cur) || (prev && cur && *cur > *prev)) {
          check.add(i, "nb" + std::to_string(k + 1) + "_rsrp", ViolationKind::NeighborOrder,
                    "neighbors not sorted by descending rsrp");
        }
      }
    }

    if (s.e2e) {
      const auto& e = *s.e2e;
      auto non_negative = [&](const char* field, std::optional<double> v) {
        if (v && !(*v >= 0.0)) check.add(i, field, ViolationKind::OutOfRange, "negative value");
      };
      non_negative("rtt_ms", e.rtt_ms);
      non_negative("dl_mbps", e.dl_throughput_mbps);
      non_negative("ul_mbps", e.ul_throughput_mbps);
      if (e.pkts_sent && *e.pkts_sent < 0) {
        check.add(i, "pkts_sent", ViolationKind::OutOfRange, "negative count");
      }
      if (e.pkts_delivered && *e.pkts_delivered < 0) {
        check.add(i, "pkts_delivered", ViolationKind::OutOfRange, "negative count");
      }
      if (e.pkts_sent && e.pkts_delivered && *e.pkts_delivered > *e.pkts_sent) {
        check.add(i, "pkts_delivered", ViolationKind::Consistency, "delivered exceeds sent");
      }
    }
  }

  std::size_t cellular = 0;
  for (const auto& s : ds.samples) cellular += s.link == LinkType::Cellular ? 1 : 0;
  if (cellular > 0) {
    report.serving_null_fraction =
        static_cast<double>(report.null_serving_cell) / static_cast<double>(cellular);
  }
  report.null_warning = report.serving_null_fraction > kNullWarnFraction;
  report.null_error = report.serving_null_fraction >= kNullErrorFraction;
  return report;
}

// ---------------------------------------------------------------------------

ProjectionOrigin centroid(const FlightDataset& ds) {
  if (ds.samples.empty()) throw std::invalid_argument("centroid of empty dataset");
  double lat = 0.0;
  double lon = 0.0;
  for (const auto& s : ds.samples) {
    lat += s.position.latitude;
    lon += s.position.longitude;
  }
  const auto n = static_cast<double>(ds.samples.size());
  return {lat / n, lon / n};
}

LocalPoint project(const GeoPosition& p, const ProjectionOrigin& o) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  return {kEarthRadiusM * (p.longitude - o.lon0) * std::cos(o.lat0 * kDeg) * kDeg,
          kEarthRadiusM * (p.latitude - o.lat0) * kDeg, p.altitude_asl};
}

std::vector<LocalPoint> local_projection(const FlightDataset& ds, const ProjectionOrigin& origin) {
  if (ds.samples.empty()) throw std::invalid_argument("local_projection: empty dataset");
  std::vector<LocalPoint> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(project(s.position, origin));
  return out;
}

std::vector<LocalPoint> local_projection(const FlightDataset& ds) {
  if (ds.samples.empty()) throw std::invalid_argument("local_projection: empty dataset");
  return local_projection(ds, centroid(ds));
}

double haversine_m(const GeoPosition& a, const GeoPosition& b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double dlat = (b.latitude - a.latitude) * kDeg;
  const double dlon = (b.longitude - a.longitude) * kDeg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.latitude * kDeg) * std::cos(b.latitude * kDeg) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace uavnet
