#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavnet/telemetry.hpp"

namespace uavnet {

// One cell (sector) of a base-station site.
struct CellSite {
  CellId id = 0;
  GeoPosition position;  // antenna position; altitude = terrain + mast
  double eirp_dbm = 46.0;
  std::optional<double> sector_azimuth_deg;    // nullopt = omni
  std::optional<double> sector_beamwidth_deg;  // half-power beamwidth
  std::int64_t tac = 1;

  void check() const;
};

// Log-distance path loss with an altitude-dependent LOS probability
// p_LOS(h) = min(1, 0.2 + 0.8 h / los_alt_scale_m), h above ground.
struct PropagationConfig {
  double pl0_db = 38.5;  // at d0 = 1 m (free space, ~2 GHz)
  double n_los = 2.0;
  double n_nlos = 3.0;
  double shadow_sigma_db = 4.0;
  // AR(1) coefficient of the per-cell shadowing process between samples.
  double shadow_correlation = 0.9;
  double nlos_extra_db = 10.0;
  double los_alt_scale_m = 160.0;
  double noise_dbm = -94.0;  // 20 MHz thermal floor plus noise figure
  double hysteresis_db = 3.0;
  // Consecutive extra samples the hysteresis condition must hold for the
  // same candidate before the serving cell changes (0 = switch immediately).
  int time_to_trigger_samples = 0;
  std::uint64_t seed = 1;

  void check() const;
};

enum class PhaseKind { Hover, Climb, Racetrack, Descend };

std::string_view to_string(PhaseKind k);
PhaseKind parse_phase_kind(std::string_view text);

// Altitude ramps linearly from the phase's start altitude to target_alt_m;
// speed is horizontal speed along the track (hover is stationary).
struct FlightPhase {
  PhaseKind kind = PhaseKind::Hover;
  double duration_s = 60.0;
  double target_alt_m = kDefaultGroundElevationM;
  double speed_mps = 0.0;
  std::string name;  // empty = kind name
};

// Closed racetrack centred on the plan origin: two straight legs joined by
// semicircles, rotated counter-clockwise by rotation_deg in the local frame.
struct TrackConfig {
  double leg_m = 800.0;
  double radius_m = 250.0;
  double rotation_deg = 0.0;
};

struct TrajectoryPlan {
  GeoPosition origin{0.0, 0.0, kDefaultGroundElevationM};  // altitude = start altitude
  TrackConfig track;
  std::vector<FlightPhase> phases;
  double min_alt_m = 240.0;
  double max_alt_m = 400.0;

  void check() const;
  double total_duration_s() const;
};

// Statistical E2E stand-in: RTT = base + exponential jitter, throughput from
// normals truncated to positive values, i.i.d. packet loss, and outages that
// null all metrics while they last.
struct E2EModel {
  double base_rtt_ms = 35.0;
  double rtt_jitter_ms = 3.0;  // mean of the exponential jitter
  double dl_mean_mbps = 80.0;
  double dl_sd_mbps = 15.0;
  double ul_mean_mbps = 12.0;
  double ul_sd_mbps = 3.0;
  double loss_prob = 0.005;
  double outage_prob = 0.0;  // per-sample probability that an outage starts
  double outage_duration_s = 5.0;
  // Extra RTT added for a few samples after each serving-cell change.
  double handover_rtt_penalty_ms = 0.0;
  double handover_penalty_s = 3.0;
  std::uint64_t seed = 1;

  void check() const;
};

E2EModel starlink_defaults();
E2EModel cellular_defaults();

struct GenerateOptions {
  std::string flight_id = "synthetic";
  double period_s = 1.0;
  TimestampNs start_time_ns = 1'700'000'000'000'000'000;
  double ground_elevation_m = kDefaultGroundElevationM;
  std::optional<E2EModel> e2e;
  // Probability that a sample's serving cell id is blanked after generation.
  double null_injection_prob = 0.0;
};

struct TruthHandover {
  TimestampNs t = 0;
  std::size_t sample_index = 0;
  CellId from_cell = 0;
  CellId to_cell = 0;
};

struct GroundTruth {
  std::vector<TruthHandover> handovers;
  std::vector<CellId> cell_ids;
  // Per sample, per cell (cell_ids order): true RSRP in dBm before reporting
  // saturation, and the LOS state used.
  std::vector<std::vector<double>> rsrp_dbm;
  std::vector<std::vector<bool>> los;
  std::vector<CellId> serving;  // true serving cell per sample
  // Phase start instants after the first, and names of all phases.
  std::vector<TimestampNs> phase_boundaries;
  std::vector<std::string> phase_names;
};

struct SynthResult {
  FlightDataset dataset;
  GroundTruth truth;
};

inline constexpr int kResourceBlocks = 100;  // 20 MHz LTE carrier

// Cellular flight. Throws std::invalid_argument on an empty site list or an
// invalid configuration.
SynthResult generate(const std::vector<CellSite>& sites, const PropagationConfig& prop,
                     const TrajectoryPlan& plan, const GenerateOptions& opts = {});

// E2E stream with one entry per plan sample.
std::vector<E2EMetrics> starlink_e2e_model(const TrajectoryPlan& plan, const E2EModel& model,
                                           double period_s = 1.0);

// Satellite flight: trajectory and E2E metrics only, radio columns null.
SynthResult generate_satellite(const TrajectoryPlan& plan, const E2EModel& model,
                               const GenerateOptions& opts = {});

struct Scenario {
  LinkType link = LinkType::Cellular;
  std::vector<CellSite> sites;
  PropagationConfig propagation;
  TrajectoryPlan plan;
  GenerateOptions options;
};

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);

// `seed` overrides the propagation and E2E seeds.
SynthResult generate(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt);

std::string truth_to_json(const GroundTruth& truth);

// Ready-made scenarios used by the tests, the acceptance suite and the CLI.

// `count` omni cells evenly spread on a ring around `centre`, antennas at
// `antenna_alt_asl_m`.
std::vector<CellSite> ring_sites(const GeoPosition& centre, std::size_t count, double radius_m,
                                 double antenna_alt_asl_m, double eirp_dbm = 46.0,
                                 CellId first_id = 1);

// Stationary vertical climb from 240 to 400 m ASL at 0.1 m/s (1600 samples),
// ten cells on a ridge above the climb column, no shadowing.
Scenario climb_scenario(std::uint64_t seed);

// 66-minute mission with the four phases Lift-off/Transition/Ascent/Descent
// over a field of sectorised sites.
Scenario mission_scenario(std::uint64_t seed);

// Satellite twin of the mission trajectory with the Starlink E2E defaults.
Scenario starlink_scenario(std::uint64_t seed);

}  // namespace uavnet
