#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "../support/fixtures.hpp"
#include "uavnet/dataset_io.hpp"
#include "uavnet/handover.hpp"
#include "uavnet/stats.hpp"
#include "uavnet/synth.hpp"

using namespace uavnet;
using namespace uavnet::testing;

namespace {

constexpr double kR = 6371000.0;

GeoPosition local_to_geo(const GeoPosition& origin, double east, double north, double alt) {
  const double deg = std::numbers::pi / 180.0;
  return {origin.latitude + north / kR / deg,
          origin.longitude + east / (kR * std::cos(origin.latitude * deg)) / deg, alt};
}

// Straight 1 km-per-100 s pass along y = -250 at 400 m, no shadowing, LOS everywhere.
TrajectoryPlan straight_plan(double duration_s = 100.0) {
  TrajectoryPlan plan;
  plan.origin = {48.0, 11.0, 400.0};
  plan.track = {4000.0, 250.0, 0.0};
  plan.phases = {{PhaseKind::Racetrack, duration_s, 400.0, 10.0, "pass"}};
  return plan;
}

PropagationConfig clean_propagation() {
  PropagationConfig p;
  p.shadow_sigma_db = 0.0;
  p.time_to_trigger_samples = 0;
  return p;
}

CellSite omni_at(CellId id, const GeoPosition& origin, double east, double north) {
  CellSite c;
  c.id = id;
  c.position = local_to_geo(origin, east, north, 400.0);
  return c;
}

std::string csv_of(const FlightDataset& ds) {
  std::ostringstream os;
  write_dataset(os, ds, TableFormat::Csv);
  return os.str();
}

std::vector<std::size_t> change_points(const FlightDataset& ds) {
  std::vector<std::size_t> out;
  for (const auto& e : detect_and_classify(ds)) out.push_back(e.sample_index);
  return out;
}

}  // namespace

TEST_CASE("single omni site: rsrp strictly decreases with distance") {
  const auto plan = straight_plan(60.0);
  // site behind the start point, the UAV flies away from it
  const auto r = generate({omni_at(1, plan.origin, -100.0, -250.0)}, clean_propagation(), plan);
  REQUIRE(r.dataset.samples.size() == 60);
  for (std::size_t k = 1; k < r.dataset.samples.size(); ++k) {
    CHECK(r.truth.rsrp_dbm[k][0] < r.truth.rsrp_dbm[k - 1][0]);
    CHECK(*r.dataset.samples[k].serving->rsrp <= *r.dataset.samples[k - 1].serving->rsrp);
  }
}

TEST_CASE("two equal sites: one handover after the midline, where the 3 dB margin is met") {
  const auto plan = straight_plan();
  const double xa = -400.0, xb = 800.0;
  const auto r = generate({omni_at(1, plan.origin, xa, -250.0), omni_at(2, plan.origin, xb, -250.0)},
                          clean_propagation(), plan);
  // Equal EIRP, LOS exponent 2: B exceeds A by 3 dB once 20 log10((x - xa) / (xb - x)) > 3.
  const double g = std::pow(10.0, 3.0 / 20.0);
  const double x_switch = (g * xb + xa) / (1.0 + g);
  const auto expected_index = static_cast<std::size_t>(std::floor(x_switch / 10.0)) + 1;
  CHECK(x_switch > (xa + xb) / 2.0);
  REQUIRE(r.truth.handovers.size() == 1);
  CHECK(r.truth.handovers[0].from_cell == 1);
  CHECK(r.truth.handovers[0].to_cell == 2);
  CHECK(r.truth.handovers[0].sample_index == expected_index);
  CHECK(change_points(r.dataset) == std::vector<std::size_t>{expected_index});
}

TEST_CASE("climb: mean rsrp per altitude bin is non-decreasing") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = generate(climb_scenario(seed));
    const auto rows = altitude_profile(bin_by_altitude(r.dataset), Metric::Rsrp);
    REQUIRE(rows.size() == 16);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].stats.mean >= rows[i - 1].stats.mean);
  }
}

TEST_CASE("e2e model: jitter 0 and outage 0 give constant rtt = base") {
  auto m = starlink_defaults();
  m.rtt_jitter_ms = 0.0;
  m.outage_prob = 0.0;
  m.loss_prob = 0.0;
  const auto s = starlink_e2e_model(straight_plan(500.0), m);
  REQUIRE(s.size() == 500);
  for (const auto& e : s) CHECK(*e.rtt_ms == m.base_rtt_ms);
}

TEST_CASE("e2e model defaults: 95th percentile rtt below 50 ms over 10^4 draws") {
  const auto s = starlink_e2e_model(straight_plan(10000.0), starlink_defaults());
  std::vector<std::optional<double>> rtt;
  for (const auto& e : s) rtt.push_back(e.rtt_ms);
  const EmpiricalCdf f(rtt);
  CHECK(f.size() > 9000);
  CHECK(f.quantile(0.95) < 50.0);
  CHECK(f.min() >= starlink_defaults().base_rtt_ms);
}

TEST_CASE("e2e model: outage probability 1 nulls every metric") {
  auto m = starlink_defaults();
  m.outage_prob = 1.0;
  for (const auto& e : starlink_e2e_model(straight_plan(200.0), m)) {
    CHECK_FALSE(e.rtt_ms.has_value());
    CHECK_FALSE(e.dl_throughput_mbps.has_value());
    CHECK_FALSE(e.ul_throughput_mbps.has_value());
    CHECK(e.pkts_delivered.value_or(0) == 0);
  }
}

TEST_CASE("throughput draws are positive") {
  auto m = starlink_defaults();
  m.dl_sd_mbps = 200.0;
  for (const auto& e : starlink_e2e_model(straight_plan(2000.0), m)) {
    if (e.dl_throughput_mbps) CHECK(*e.dl_throughput_mbps > 0.0);
    if (e.ul_throughput_mbps) CHECK(*e.ul_throughput_mbps > 0.0);
  }
}

TEST_CASE("identical scenario and seed give byte-identical datasets") {
  const auto sc = mission_scenario(7);
  CHECK(csv_of(generate(sc).dataset) == csv_of(generate(sc).dataset));
  CHECK(csv_of(generate(sc, 8).dataset) != csv_of(generate(sc).dataset));
  const auto sat = starlink_scenario(7);
  CHECK(csv_of(generate(sat).dataset) == csv_of(generate(sat).dataset));
}

TEST_CASE("rssi is at least rsrp + 10 log10(12) on every sample") {
  const auto r = generate(mission_scenario(3));
  const double floor_db = 10.0 * std::log10(12.0);
  std::size_t checked = 0;
  for (const auto& s : r.dataset.samples) {
    if (!s.serving || !s.serving->rssi || !s.serving->rsrp) continue;
    CHECK(*s.serving->rssi >= *s.serving->rsrp + floor_db - 1e-9);
    ++checked;
  }
  CHECK(checked > 1000);
}

TEST_CASE("truth handovers are exactly the serving-cell change points") {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto r = generate(mission_scenario(seed));
    std::vector<std::size_t> truth;
    for (const auto& h : r.truth.handovers) truth.push_back(h.sample_index);
    CHECK_FALSE(truth.empty());
    CHECK(change_points(r.dataset) == truth);
  }
}

TEST_CASE("with injected nulls truth times are a superset of detected changes") {
  auto sc = mission_scenario(4);
  sc.options.null_injection_prob = 0.02;
  const auto r = generate(sc);
  std::vector<TimestampNs> truth;
  for (const auto& h : r.truth.handovers) truth.push_back(h.t);
  std::size_t nulls = 0;
  for (const auto& s : r.dataset.samples) nulls += serving_cell(s) ? 0 : 1;
  CHECK(nulls > 0);
  // every detected event is at or after a truth change, and none are invented
  const auto ev = detect_and_classify(r.dataset);
  CHECK(ev.size() <= truth.size());
  for (const auto& e : ev) {
    const auto it = std::upper_bound(truth.begin(), truth.end(), e.t);
    CHECK(it != truth.begin());
  }
}

TEST_CASE("argmax sanity with hysteresis 0 and no shadowing") {
  auto sc = mission_scenario(5);
  sc.propagation.hysteresis_db = 0.0;
  sc.propagation.shadow_sigma_db = 0.0;
  sc.propagation.time_to_trigger_samples = 0;
  const auto r = generate(sc);
  for (std::size_t k = 0; k < r.truth.serving.size(); ++k) {
    const auto& p = r.truth.rsrp_dbm[k];
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    CHECK(r.truth.serving[k] == r.truth.cell_ids[best]);
  }
}

TEST_CASE("null injection blanks serving cell ids at about the requested rate") {
  auto sc = mission_scenario(6);
  sc.options.null_injection_prob = 0.1;
  const auto r = generate(sc);
  std::size_t nulls = 0;
  for (const auto& s : r.dataset.samples) nulls += serving_cell(s) ? 0 : 1;
  const double frac = static_cast<double>(nulls) / static_cast<double>(r.dataset.samples.size());
  CHECK(frac == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("generated datasets pass validation") {
  for (const auto& sc : {climb_scenario(1), mission_scenario(1), starlink_scenario(1)}) {
    const auto r = generate(sc);
    const auto v = validate_dataset(r.dataset);
    CHECK(v.range_violations == 0);
    CHECK(v.timestamp_regressions == 0);
  }
}

TEST_CASE("mission phases match the four named segments") {
  const auto r = generate(mission_scenario(1));
  CHECK(r.truth.phase_names == std::vector<std::string>{"Lift-off", "Transition", "Ascent", "Descent"});
  CHECK(r.truth.phase_boundaries.size() == 3);
  const auto seg = segment_phases(r.dataset, r.truth.phase_boundaries, r.truth.phase_names);
  CHECK(seg.size() == 4);
}

TEST_CASE("scenario json round trip") {
  for (const auto& sc : {climb_scenario(3), mission_scenario(3), starlink_scenario(3)}) {
    const auto text = scenario_to_json(sc);
    const auto back = parse_scenario(text);
    CHECK(scenario_to_json(back) == text);
    CHECK(csv_of(generate(back).dataset) == csv_of(generate(sc).dataset));
  }
  CHECK_THROWS(parse_scenario("{not json"));
  CHECK_THROWS(parse_scenario(R"({"link": "cellular", "sites": []})"));
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(generate({}, clean_propagation(), straight_plan()), std::invalid_argument);
  auto plan = straight_plan();
  plan.phases.clear();
  CHECK_THROWS(generate({omni_at(1, plan.origin, 0, 0)}, clean_propagation(), plan));
  auto p = clean_propagation();
  p.hysteresis_db = -1.0;
  CHECK_THROWS(generate({omni_at(1, plan.origin, 0, 0)}, p, straight_plan()));
}
