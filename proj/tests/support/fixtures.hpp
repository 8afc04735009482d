#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "uavnet/rng.hpp"
#include "uavnet/telemetry.hpp"

namespace uavnet::testing {

inline constexpr TimestampNs kT0 = 1'700'000'000'000'000'000;

inline TimestampNs at_s(double s) { return kT0 + static_cast<TimestampNs>(std::llround(s * 1e9)); }

inline Sample cell_sample(double t_s, std::optional<CellId> cell, std::optional<double> rsrp = -90.0,
                          std::optional<double> rsrq = -10.0, std::optional<double> nb_rsrp = std::nullopt) {
  Sample s;
  s.timestamp = at_s(t_s);
  s.position = {49.0, 8.0, 300.0};
  CellObservation srv;
  srv.cell_id = cell;
  srv.rsrp = rsrp;
  srv.rsrq = rsrq;
  s.serving = srv;
  if (nb_rsrp) {
    CellObservation nb;
    nb.cell_id = 9999;
    nb.rsrp = nb_rsrp;
    nb.rsrq = -12.0;
    s.neighbors.push_back(nb);
  }
  return s;
}

inline FlightDataset dataset_of(std::vector<Sample> samples, std::string id = "test") {
  FlightDataset ds;
  ds.flight_id = std::move(id);
  ds.samples = std::move(samples);
  return ds;
}

// Serving-cell trace at 1 s spacing.
inline FlightDataset cell_trace(const std::vector<std::optional<CellId>>& cells) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < cells.size(); ++i) out.push_back(cell_sample(static_cast<double>(i), cells[i]));
  return dataset_of(std::move(out));
}

// Arbitrary valid dataset restricted to the fields the file format carries.
inline FlightDataset random_dataset(Rng& rng, std::size_t n, LinkType link = LinkType::Cellular) {
  auto maybe = [&](double p) { return rng.uniform() >= p; };
  FlightDataset ds;
  ds.flight_id = "random";
  TimestampNs t = kT0 + static_cast<TimestampNs>(rng.below(1'000'000));
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    t += 1 + static_cast<TimestampNs>(rng.below(2'000'000'000));
    s.timestamp = t;
    s.link = link;
    s.position = {rng.uniform(-89.0, 89.0), rng.uniform(-179.0, 179.0), rng.uniform(-50.0, 5000.0)};
    if (maybe(0.2)) {
      s.flight = FlightState{rng.uniform(0.0, 40.0), rng.uniform(0.0, 359.9), rng.uniform(-45.0, 45.0),
                             rng.uniform(-30.0, 30.0)};
    }
    if (link == LinkType::Cellular && maybe(0.1)) {
      CellObservation srv;
      if (maybe(0.05)) srv.cell_id = static_cast<CellId>(rng.below(1u << 28));
      if (maybe(0.2)) srv.pci = static_cast<std::int32_t>(rng.below(504));
      if (maybe(0.2)) srv.tac = static_cast<std::int64_t>(rng.below(65536));
      if (maybe(0.1)) srv.rsrp = rng.uniform(-156.0, -31.0);
      if (maybe(0.1)) srv.rsrq = rng.uniform(-34.0, 3.0);
      if (maybe(0.1)) srv.rssi = rng.uniform(-120.0, -10.0);
      if (maybe(0.1)) srv.sinr = rng.uniform(-23.0, 40.0);
      s.serving = srv;
      const auto k = rng.below(4);
      for (std::uint64_t j = 0; j < k; ++j) {
        CellObservation nb;
        if (maybe(0.1)) nb.cell_id = static_cast<CellId>(rng.below(1u << 28));
        if (maybe(0.1)) nb.rsrp = rng.uniform(-156.0, -31.0);
        if (maybe(0.1)) nb.rsrq = rng.uniform(-34.0, 3.0);
        if (nb != CellObservation{}) s.neighbors.push_back(nb);
      }
      normalize_neighbors(s.neighbors);
    }
    if (maybe(0.2)) {
      E2EMetrics e;
      if (maybe(0.1)) e.rtt_ms = rng.uniform(1.0, 500.0);
      if (maybe(0.1)) e.dl_throughput_mbps = rng.uniform(0.0, 200.0);
      if (maybe(0.1)) e.ul_throughput_mbps = rng.uniform(0.0, 50.0);
      if (maybe(0.1)) {
        e.pkts_sent = static_cast<std::int64_t>(rng.below(10000));
        e.pkts_delivered = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(*e.pkts_sent) + 1));
      }
      if (e != E2EMetrics{}) s.e2e = e;
    }
    if (s.serving && *s.serving == CellObservation{}) s.serving.reset();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace uavnet::testing
