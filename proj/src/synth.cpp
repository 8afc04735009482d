#include "uavnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "uavnet/rng.hpp"

namespace uavnet {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kGravity = 9.80665;

// Stream ids for Rng::stream.
enum : std::uint64_t { kStreamLos = 1, kStreamShadow = 2, kStreamE2E = 3, kStreamNulls = 4 };

double db_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_db(double mw) { return 10.0 * std::log10(mw); }

GeoPosition offset_position(const GeoPosition& origin, double east_m, double north_m, double alt) {
  const double lat = origin.latitude + north_m / kEarthRadiusM / kDeg;
  const double lon =
      origin.longitude + east_m / (kEarthRadiusM * std::cos(origin.latitude * kDeg)) / kDeg;
  return {lat, lon, alt};
}

double wrap_deg180(double a) {
  a = std::fmod(a + 180.0, 360.0);
  if (a < 0) a += 360.0;
  return a - 180.0;
}

double compass_heading(double vx_east, double vy_north) {
  double h = std::atan2(vx_east, vy_north) / kDeg;
  if (h < 0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

struct TrackPoint {
  double x = 0.0;
  double y = 0.0;
  double dir_x = 1.0;  // unit tangent
  double dir_y = 0.0;
  double curvature_sign = 0.0;  // +1 left turn, 0 straight
};

// Racetrack traversed counter-clockwise starting at the middle of the south leg.
TrackPoint track_point(const TrackConfig& tr, double s) {
  const double leg = tr.leg_m;
  const double r = tr.radius_m;
  const double perimeter = 2.0 * leg + 2.0 * std::numbers::pi * r;
  s = std::fmod(s + 0.5 * leg, perimeter);
  if (s < 0) s += perimeter;
  TrackPoint p;
  if (s < leg) {
    p = {-leg / 2 + s, -r, 1.0, 0.0, 0.0};
  } else if (s < leg + std::numbers::pi * r) {
    const double th = -std::numbers::pi / 2 + (s - leg) / r;
    p = {leg / 2 + r * std::cos(th), r * std::sin(th), -std::sin(th), std::cos(th), 1.0};
  } else if (s < 2 * leg + std::numbers::pi * r) {
    p = {leg / 2 - (s - leg - std::numbers::pi * r), r, -1.0, 0.0, 0.0};
  } else {
    const double th = std::numbers::pi / 2 + (s - 2 * leg - std::numbers::pi * r) / r;
    p = {-leg / 2 + r * std::cos(th), r * std::sin(th), -std::sin(th), std::cos(th), 1.0};
  }
  const double c = std::cos(tr.rotation_deg * kDeg);
  const double sn = std::sin(tr.rotation_deg * kDeg);
  return {c * p.x - sn * p.y, sn * p.x + c * p.y, c * p.dir_x - sn * p.dir_y,
          sn * p.dir_x + c * p.dir_y, p.curvature_sign};
}

struct TrajectorySample {
  GeoPosition position;
  FlightState flight;
  std::size_t phase = 0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<std::size_t> phase_first_sample;
};

Trajectory sample_trajectory(const TrajectoryPlan& plan, double period_s) {
  plan.check();
  if (!(period_s > 0.0)) throw std::invalid_argument("period must be positive");
  const double total = plan.total_duration_s();
  const auto n = static_cast<std::size_t>(std::llround(total / period_s));

  Trajectory traj;
  traj.samples.reserve(n);
  std::size_t phase = 0;
  double phase_start_t = 0.0;
  double phase_start_alt = plan.origin.altitude_asl;
  double distance = 0.0;  // along track
  double prev_t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * period_s;
    while (phase + 1 < plan.phases.size() && t >= phase_start_t + plan.phases[phase].duration_s) {
      phase_start_alt = plan.phases[phase].target_alt_m;
      phase_start_t += plan.phases[phase].duration_s;
      ++phase;
    }
    if (traj.phase_first_sample.size() <= phase) {
      while (traj.phase_first_sample.size() <= phase) traj.phase_first_sample.push_back(k);
    }
    const FlightPhase& ph = plan.phases[phase];
    const double frac = std::clamp((t - phase_start_t) / ph.duration_s, 0.0, 1.0);
    const double alt = phase_start_alt + (ph.target_alt_m - phase_start_alt) * frac;
    const double speed = ph.kind == PhaseKind::Hover ? 0.0 : ph.speed_mps;
    distance += speed * (t - prev_t);
    prev_t = t;

    const TrackPoint tp = track_point(plan.track, distance);
    const double vz = (ph.target_alt_m - phase_start_alt) / ph.duration_s;
    TrajectorySample ts;
    ts.position = offset_position(plan.origin, tp.x, tp.y, alt);
    ts.flight.speed_mps = speed;
    ts.flight.heading_deg = compass_heading(tp.dir_x, tp.dir_y);
    ts.flight.roll_deg =
        speed > 0.0 ? -tp.curvature_sign * std::atan(speed * speed / (kGravity * plan.track.radius_m)) / kDeg
                    : 0.0;
    ts.flight.pitch_deg = speed > 0.0 ? std::atan2(vz, speed) / kDeg : 0.0;
    ts.phase = phase;
    traj.samples.push_back(ts);
  }
  return traj;
}

double sector_loss_db(const CellSite& site, const GeoPosition& uav) {
  if (!site.sector_azimuth_deg || !site.sector_beamwidth_deg) return 0.0;
  const double north = (uav.latitude - site.position.latitude) * kDeg * kEarthRadiusM;
  const double east = (uav.longitude - site.position.longitude) * kDeg * kEarthRadiusM *
                      std::cos(site.position.latitude * kDeg);
  const double bearing = compass_heading(east, north);
  const double off = wrap_deg180(bearing - *site.sector_azimuth_deg);
  return std::min(12.0 * (off / *site.sector_beamwidth_deg) * (off / *site.sector_beamwidth_deg), 20.0);
}

double distance_3d(const CellSite& site, const GeoPosition& uav) {
  const double north = (uav.latitude - site.position.latitude) * kDeg * kEarthRadiusM;
  const double east = (uav.longitude - site.position.longitude) * kDeg * kEarthRadiusM *
                      std::cos(0.5 * (uav.latitude + site.position.latitude) * kDeg);
  const double up = uav.altitude_asl - site.position.altitude_asl;
  return std::max(1.0, std::sqrt(north * north + east * east + up * up));
}

double clamp_report(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

std::vector<E2EMetrics> e2e_stream(std::size_t n, const E2EModel& model,
                                   const std::vector<CellId>* serving, double period_s) {
  model.check();
  Rng rng = Rng::stream(model.seed, kStreamE2E);
  const auto outage_len =
      static_cast<std::size_t>(std::max(1.0, std::round(model.outage_duration_s / period_s)));
  const auto penalty_len =
      static_cast<std::size_t>(std::max(0.0, std::round(model.handover_penalty_s / period_s)));

  auto truncated = [&rng](double mean, double sd) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double v = rng.normal(mean, sd);
      if (v > 0.0) return v;
    }
    return mean;
  };

  std::vector<E2EMetrics> out(n);
  std::size_t outage_left = 0;
  std::size_t penalty_left = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // Fixed draw count per sample keeps streams aligned across parameter changes.
    const double u_outage = rng.uniform();
    const double u_loss = rng.uniform();
    const double jitter = rng.exponential(1.0);
    const double dl = truncated(model.dl_mean_mbps, model.dl_sd_mbps);
    const double ul = truncated(model.ul_mean_mbps, model.ul_sd_mbps);

    if (serving && i > 0 && (*serving)[i] != (*serving)[i - 1]) penalty_left = penalty_len;
    if (outage_left == 0 && u_outage < model.outage_prob) outage_left = outage_len;

    E2EMetrics& e = out[i];
    e.pkts_sent = 1;
    if (outage_left > 0) {
      --outage_left;
      e.pkts_delivered = 0;
    } else {
      e.dl_throughput_mbps = dl;
      e.ul_throughput_mbps = ul;
      if (u_loss < model.loss_prob) {
        e.pkts_delivered = 0;
      } else {
        double rtt = model.base_rtt_ms + model.rtt_jitter_ms * jitter;
        if (penalty_left > 0) rtt += model.handover_rtt_penalty_ms;
        e.rtt_ms = rtt;
        e.pkts_delivered = 1;
      }
    }
    if (penalty_left > 0) --penalty_left;
  }
  return out;
}

void fill_phase_truth(const TrajectoryPlan& plan, const Trajectory& traj, TimestampNs t0,
                      double period_s, GroundTruth& truth) {
  for (std::size_t p = 0; p < plan.phases.size(); ++p) {
    truth.phase_names.push_back(plan.phases[p].name.empty() ? std::string(to_string(plan.phases[p].kind))
                                                            : plan.phases[p].name);
  }
  for (std::size_t p = 1; p < traj.phase_first_sample.size(); ++p) {
    truth.phase_boundaries.push_back(
        t0 + static_cast<TimestampNs>(std::llround(static_cast<double>(traj.phase_first_sample[p]) *
                                                    period_s * 1e9)));
  }
  truth.phase_names.resize(traj.phase_first_sample.size());
}

TimestampNs sample_time(const GenerateOptions& opts, std::size_t k) {
  return opts.start_time_ns +
         static_cast<TimestampNs>(std::llround(static_cast<double>(k) * opts.period_s * 1e9));
}

}  // namespace

// ---------------------------------------------------------------------------

void CellSite::check() const {
  if (!(eirp_dbm >= 30.0 && eirp_dbm <= 70.0)) {
    throw std::invalid_argument("cell " + std::to_string(id) + ": eirp_dbm outside [30, 70]");
  }
  if (sector_beamwidth_deg && !(*sector_beamwidth_deg > 0.0 && *sector_beamwidth_deg <= 360.0)) {
    throw std::invalid_argument("cell " + std::to_string(id) + ": beamwidth outside (0, 360]");
  }
  if (sector_azimuth_deg.has_value() != sector_beamwidth_deg.has_value()) {
    throw std::invalid_argument("cell " + std::to_string(id) +
                                ": sector azimuth and beamwidth must be given together");
  }
}

void PropagationConfig::check() const {
  if (!(n_los > 0.0 && n_nlos >= n_los)) throw std::invalid_argument("need n_nlos >= n_los > 0");
  if (!(shadow_sigma_db >= 0.0)) throw std::invalid_argument("shadow_sigma_db must be >= 0");
  if (!(shadow_correlation >= 0.0 && shadow_correlation < 1.0)) {
    throw std::invalid_argument("shadow_correlation must be in [0, 1)");
  }
  if (!(los_alt_scale_m > 0.0)) throw std::invalid_argument("los_alt_scale_m must be positive");
  if (!(hysteresis_db >= 0.0)) throw std::invalid_argument("hysteresis_db must be >= 0");
  if (time_to_trigger_samples < 0) throw std::invalid_argument("time_to_trigger_samples must be >= 0");
}

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Hover: return "hover";
    case PhaseKind::Climb: return "climb";
    case PhaseKind::Racetrack: return "racetrack";
    case PhaseKind::Descend: return "descend";
  }
  return "?";
}

PhaseKind parse_phase_kind(std::string_view text) {
  for (PhaseKind k : {PhaseKind::Hover, PhaseKind::Climb, PhaseKind::Racetrack, PhaseKind::Descend}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown phase kind '" + std::string(text) + "'");
}

void TrajectoryPlan::check() const {
  if (phases.empty()) throw std::invalid_argument("trajectory plan has no phases");
  if (!(track.leg_m >= 0.0 && track.radius_m > 0.0)) throw std::invalid_argument("invalid track");
  auto in_range = [&](double a) { return a >= min_alt_m && a <= max_alt_m; };
  if (!in_range(origin.altitude_asl)) throw std::invalid_argument("start altitude outside plan range");
  double alt = origin.altitude_asl;
  for (const auto& ph : phases) {
    if (!(ph.duration_s > 0.0)) throw std::invalid_argument("phase duration must be positive");
    if (!(ph.speed_mps >= 0.0)) throw std::invalid_argument("phase speed must be >= 0");
    if (!in_range(ph.target_alt_m)) {
      throw std::invalid_argument("phase target altitude outside [" + std::to_string(min_alt_m) +
                                  ", " + std::to_string(max_alt_m) + "]");
    }
    if (ph.kind == PhaseKind::Climb && ph.target_alt_m < alt) {
      throw std::invalid_argument("climb phase must not lose altitude");
    }
    if (ph.kind == PhaseKind::Descend && ph.target_alt_m > alt) {
      throw std::invalid_argument("descend phase must not gain altitude");
    }
    alt = ph.target_alt_m;
  }
}

double TrajectoryPlan::total_duration_s() const {
  double t = 0.0;
  for (const auto& ph : phases) t += ph.duration_s;
  return t;
}

void E2EModel::check() const {
  if (!(dl_mean_mbps > 0.0 && ul_mean_mbps > 0.0)) {
    throw std::invalid_argument("throughput means must be positive");
  }
  if (!(base_rtt_ms >= 0.0 && rtt_jitter_ms >= 0.0 && dl_sd_mbps >= 0.0 && ul_sd_mbps >= 0.0)) {
    throw std::invalid_argument("E2E model parameters must be non-negative");
  }
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0 && outage_prob >= 0.0 && outage_prob <= 1.0)) {
    throw std::invalid_argument("probabilities must be in [0, 1]");
  }
}

E2EModel starlink_defaults() { return E2EModel{}; }

E2EModel cellular_defaults() {
  E2EModel m;
  m.base_rtt_ms = 55.0;
  m.rtt_jitter_ms = 30.0;
  m.dl_mean_mbps = 28.0;
  m.dl_sd_mbps = 12.0;
  m.ul_mean_mbps = 9.0;
  m.ul_sd_mbps = 4.0;
  m.loss_prob = 0.0056;
  m.handover_rtt_penalty_ms = 80.0;
  m.handover_penalty_s = 3.0;
  return m;
}

SynthResult generate(const std::vector<CellSite>& sites, const PropagationConfig& prop,
                     const TrajectoryPlan& plan, const GenerateOptions& opts) {
  if (sites.empty()) throw std::invalid_argument("generate: empty site list");
  for (const auto& s : sites) s.check();
  prop.check();
  if (!(opts.null_injection_prob >= 0.0 && opts.null_injection_prob <= 1.0)) {
    throw std::invalid_argument("null_injection_prob must be in [0, 1]");
  }

  const Trajectory traj = sample_trajectory(plan, opts.period_s);
  const std::size_t n = traj.samples.size();
  const std::size_t m = sites.size();
  const double re_offset_db = 10.0 * std::log10(kResourceBlocks * 12.0);
  const double noise_mw = db_to_mw(prop.noise_dbm);

  // One uniform per cell decides at which height its LOS state switches on,
  // keeping the LOS state consistent along the trajectory. The uniforms are
  // stratified over cells (one per 1/m slice, randomly assigned), so each
  // cell is still LOS with probability p_LOS while the number of LOS cells
  // tracks m * p_LOS.
  Rng los_rng = Rng::stream(prop.seed, kStreamLos);
  std::vector<double> los_threshold(m);
  std::vector<std::size_t> strata(m);
  for (std::size_t c = 0; c < m; ++c) strata[c] = c;
  los_rng.shuffle(strata.begin(), strata.end());
  for (std::size_t c = 0; c < m; ++c) {
    los_threshold[c] = (static_cast<double>(strata[c]) + los_rng.uniform()) / static_cast<double>(m);
  }

  Rng shadow_rng = Rng::stream(prop.seed, kStreamShadow);
  std::vector<double> shadow(m, 0.0);
  const double innovation = std::sqrt(1.0 - prop.shadow_correlation * prop.shadow_correlation);

  SynthResult out;
  auto& ds = out.dataset;
  auto& truth = out.truth;
  ds.flight_id = opts.flight_id;
  ds.nominal_period_s = opts.period_s;
  ds.samples.reserve(n);
  for (const auto& s : sites) truth.cell_ids.push_back(s.id);
  truth.rsrp_dbm.reserve(n);
  truth.los.reserve(n);

  std::optional<std::size_t> serving;
  std::optional<std::size_t> pending;
  int pending_count = 0;
  std::vector<double> power(m);  // total received power per cell, dBm
  std::vector<double> rsrp(m);
  std::vector<bool> los(m);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& ts = traj.samples[k];
    const double h_agl = std::max(0.0, ts.position.altitude_asl - opts.ground_elevation_m);
    const double p_los = std::min(1.0, 0.2 + 0.8 * h_agl / prop.los_alt_scale_m);

    for (std::size_t c = 0; c < m; ++c) {
      const double z = shadow_rng.normal();
      shadow[c] = k == 0 ? prop.shadow_sigma_db * z
                         : prop.shadow_correlation * shadow[c] + innovation * prop.shadow_sigma_db * z;
      los[c] = los_threshold[c] < p_los;
      const double d = distance_3d(sites[c], ts.position);
      const double exponent = los[c] ? prop.n_los : prop.n_nlos;
      const double pl = prop.pl0_db + 10.0 * exponent * std::log10(d) + (los[c] ? 0.0 : prop.nlos_extra_db);
      power[c] = sites[c].eirp_dbm - pl - sector_loss_db(sites[c], ts.position) - shadow[c];
      rsrp[c] = power[c] - re_offset_db;
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < m; ++c) {
      if (rsrp[c] > rsrp[best]) best = c;
    }
    if (!serving) {
      serving = best;
    } else if (rsrp[best] > rsrp[*serving] + prop.hysteresis_db) {
      if (pending == best) {
        ++pending_count;
      } else {
        pending = best;
        pending_count = 0;
      }
      if (pending_count >= prop.time_to_trigger_samples) {
        truth.handovers.push_back({sample_time(opts, k), k, sites[*serving].id, sites[best].id});
        serving = best;
        pending.reset();
      }
    } else {
      pending.reset();
    }
    const std::size_t s_idx = *serving;

    double total_mw = noise_mw;
    for (double p : power) total_mw += db_to_mw(p);
    const double rssi = mw_to_db(total_mw);
    const double sinr = power[s_idx] - mw_to_db(total_mw - db_to_mw(power[s_idx]));
    auto rsrq_of = [&](std::size_t c) { return rsrp[c] - rssi + re_offset_db; };

    Sample smp;
    smp.timestamp = sample_time(opts, k);
    smp.position = ts.position;
    smp.flight = ts.flight;
    smp.link = LinkType::Cellular;
    CellObservation srv;
    srv.cell_id = sites[s_idx].id;
    srv.pci = static_cast<std::int32_t>(sites[s_idx].id % 504);
    srv.tac = sites[s_idx].tac;
    srv.rsrp = clamp_report(rsrp[s_idx], -156.0, -31.0);
    srv.rsrq = clamp_report(rsrq_of(s_idx), -34.0, 3.0);
    srv.rssi = clamp_report(rssi, -120.0, -10.0);
    srv.sinr = clamp_report(sinr, -23.0, 40.0);
    smp.serving = srv;

    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < m; ++c) {
      if (c != s_idx) order.push_back(c);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rsrp[a] > rsrp[b]; });
    for (std::size_t j = 0; j < std::min(order.size(), kMaxNeighbors); ++j) {
      const std::size_t c = order[j];
      CellObservation nb;
      nb.cell_id = sites[c].id;
      nb.rsrp = clamp_report(rsrp[c], -156.0, -31.0);
      nb.rsrq = clamp_report(rsrq_of(c), -34.0, 3.0);
      smp.neighbors.push_back(nb);
    }
    ds.samples.push_back(std::move(smp));
    truth.rsrp_dbm.push_back(rsrp);
    truth.los.push_back(los);
    truth.serving.push_back(sites[s_idx].id);
  }

  fill_phase_truth(plan, traj, opts.start_time_ns, opts.period_s, truth);

  if (opts.e2e) {
    auto e2e = e2e_stream(n, *opts.e2e, &truth.serving, opts.period_s);
    for (std::size_t k = 0; k < n; ++k) ds.samples[k].e2e = e2e[k];
  }

  if (opts.null_injection_prob > 0.0) {
    Rng null_rng = Rng::stream(prop.seed, kStreamNulls);
    for (auto& s : ds.samples) {
      if (null_rng.bernoulli(opts.null_injection_prob)) s.serving->cell_id.reset();
    }
  }
  return out;
}

std::vector<E2EMetrics> starlink_e2e_model(const TrajectoryPlan& plan, const E2EModel& model,
                                           double period_s) {
  plan.check();
  if (!(period_s > 0.0)) throw std::invalid_argument("period must be positive");
  const auto n = static_cast<std::size_t>(std::llround(plan.total_duration_s() / period_s));
  return e2e_stream(n, model, nullptr, period_s);
}

SynthResult generate_satellite(const TrajectoryPlan& plan, const E2EModel& model,
                               const GenerateOptions& opts) {
  const Trajectory traj = sample_trajectory(plan, opts.period_s);
  const auto e2e = e2e_stream(traj.samples.size(), model, nullptr, opts.period_s);
  SynthResult out;
  out.dataset.flight_id = opts.flight_id;
  out.dataset.nominal_period_s = opts.period_s;
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    Sample s;
    s.timestamp = sample_time(opts, k);
    s.position = traj.samples[k].position;
    s.flight = traj.samples[k].flight;
    s.link = LinkType::Satellite;
    s.e2e = e2e[k];
    out.dataset.samples.push_back(std::move(s));
  }
  fill_phase_truth(plan, traj, opts.start_time_ns, opts.period_s, out.truth);
  return out;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

using json = nlohmann::json;

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

GeoPosition read_position(const json& j, double default_alt) {
  GeoPosition p{j.at("lat").get<double>(), j.at("lon").get<double>(), default_alt};
  read_opt(j, "alt_asl_m", p.altitude_asl);
  return p;
}

E2EModel read_e2e(const json& j, E2EModel m) {
  read_opt(j, "base_rtt_ms", m.base_rtt_ms);
  read_opt(j, "rtt_jitter_ms", m.rtt_jitter_ms);
  read_opt(j, "dl_mean_mbps", m.dl_mean_mbps);
  read_opt(j, "dl_sd_mbps", m.dl_sd_mbps);
  read_opt(j, "ul_mean_mbps", m.ul_mean_mbps);
  read_opt(j, "ul_sd_mbps", m.ul_sd_mbps);
  read_opt(j, "loss_prob", m.loss_prob);
  read_opt(j, "outage_prob", m.outage_prob);
  read_opt(j, "outage_duration_s", m.outage_duration_s);
  read_opt(j, "handover_rtt_penalty_ms", m.handover_rtt_penalty_ms);
  read_opt(j, "handover_penalty_s", m.handover_penalty_s);
  read_opt(j, "seed", m.seed);
  return m;
}

json write_e2e(const E2EModel& m) {
  return {{"base_rtt_ms", m.base_rtt_ms},
          {"rtt_jitter_ms", m.rtt_jitter_ms},
          {"dl_mean_mbps", m.dl_mean_mbps},
          {"dl_sd_mbps", m.dl_sd_mbps},
          {"ul_mean_mbps", m.ul_mean_mbps},
          {"ul_sd_mbps", m.ul_sd_mbps},
          {"loss_prob", m.loss_prob},
          {"outage_prob", m.outage_prob},
          {"outage_duration_s", m.outage_duration_s},
          {"handover_rtt_penalty_ms", m.handover_rtt_penalty_ms},
          {"handover_penalty_s", m.handover_penalty_s},
          {"seed", m.seed}};
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  try {
    Scenario sc;
    if (j.contains("link")) sc.link = parse_link(j.at("link").get<std::string>());
    auto& o = sc.options;
    read_opt(j, "flight_id", o.flight_id);
    read_opt(j, "period_s", o.period_s);
    read_opt(j, "start_time_ns", o.start_time_ns);
    read_opt(j, "ground_elevation_m", o.ground_elevation_m);
    read_opt(j, "null_injection_prob", o.null_injection_prob);

    if (j.contains("sites")) {
      for (const auto& js : j.at("sites")) {
        CellSite s;
        s.id = js.at("id").get<CellId>();
        s.position = read_position(js, o.ground_elevation_m + 30.0);
        read_opt(js, "eirp_dbm", s.eirp_dbm);
        read_opt(js, "sector_azimuth_deg", s.sector_azimuth_deg);
        read_opt(js, "sector_beamwidth_deg", s.sector_beamwidth_deg);
        read_opt(js, "tac", s.tac);
        sc.sites.push_back(s);
      }
    }
    if (j.contains("propagation")) {
      const auto& jp = j.at("propagation");
      auto& p = sc.propagation;
      read_opt(jp, "pl0_db", p.pl0_db);
      read_opt(jp, "n_los", p.n_los);
      read_opt(jp, "n_nlos", p.n_nlos);
      read_opt(jp, "shadow_sigma_db", p.shadow_sigma_db);
      read_opt(jp, "shadow_correlation", p.shadow_correlation);
      read_opt(jp, "nlos_extra_db", p.nlos_extra_db);
      read_opt(jp, "los_alt_scale_m", p.los_alt_scale_m);
      read_opt(jp, "noise_dbm", p.noise_dbm);
      read_opt(jp, "hysteresis_db", p.hysteresis_db);
      read_opt(jp, "time_to_trigger_samples", p.time_to_trigger_samples);
      read_opt(jp, "seed", p.seed);
    }
    const auto& jplan = j.at("plan");
    auto& plan = sc.plan;
    plan.origin = read_position(jplan.at("origin"), o.ground_elevation_m);
    read_opt(jplan, "min_alt_m", plan.min_alt_m);
    read_opt(jplan, "max_alt_m", plan.max_alt_m);
    if (jplan.contains("track")) {
      const auto& jt = jplan.at("track");
      read_opt(jt, "leg_m", plan.track.leg_m);
      read_opt(jt, "radius_m", plan.track.radius_m);
      read_opt(jt, "rotation_deg", plan.track.rotation_deg);
    }
    for (const auto& jph : jplan.at("phases")) {
      FlightPhase ph;
      ph.kind = parse_phase_kind(jph.at("kind").get<std::string>());
      ph.duration_s = jph.at("duration_s").get<double>();
      ph.target_alt_m = jph.at("target_alt_m").get<double>();
      read_opt(jph, "speed_mps", ph.speed_mps);
      read_opt(jph, "name", ph.name);
      plan.phases.push_back(ph);
    }
    if (j.contains("e2e") && !j.at("e2e").is_null()) {
      const E2EModel base = sc.link == LinkType::Satellite ? starlink_defaults() : cellular_defaults();
      o.e2e = read_e2e(j.at("e2e"), base);
    }
    plan.check();
    sc.propagation.check();
    for (const auto& s : sc.sites) s.check();
    if (sc.link == LinkType::Cellular && sc.sites.empty()) {
      throw std::invalid_argument("cellular scenario needs at least one site");
    }
    return sc;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read scenario file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  const auto& o = sc.options;
  j["link"] = std::string(to_string(sc.link));
  j["flight_id"] = o.flight_id;
  j["period_s"] = o.period_s;
  j["start_time_ns"] = o.start_time_ns;
  j["ground_elevation_m"] = o.ground_elevation_m;
  j["null_injection_prob"] = o.null_injection_prob;
  j["sites"] = json::array();
  for (const auto& s : sc.sites) {
    json js = {{"id", s.id},
               {"lat", s.position.latitude},
               {"lon", s.position.longitude},
               {"alt_asl_m", s.position.altitude_asl},
               {"eirp_dbm", s.eirp_dbm},
               {"tac", s.tac}};
    if (s.sector_azimuth_deg) js["sector_azimuth_deg"] = *s.sector_azimuth_deg;
    if (s.sector_beamwidth_deg) js["sector_beamwidth_deg"] = *s.sector_beamwidth_deg;
    j["sites"].push_back(js);
  }
  const auto& p = sc.propagation;
  j["propagation"] = {{"pl0_db", p.pl0_db},
                      {"n_los", p.n_los},
                      {"n_nlos", p.n_nlos},
                      {"shadow_sigma_db", p.shadow_sigma_db},
                      {"shadow_correlation", p.shadow_correlation},
                      {"nlos_extra_db", p.nlos_extra_db},
                      {"los_alt_scale_m", p.los_alt_scale_m},
                      {"noise_dbm", p.noise_dbm},
                      {"hysteresis_db", p.hysteresis_db},
                      {"time_to_trigger_samples", p.time_to_trigger_samples},
                      {"seed", p.seed}};
  json jp;
  jp["origin"] = {{"lat", sc.plan.origin.latitude},
                  {"lon", sc.plan.origin.longitude},
                  {"alt_asl_m", sc.plan.origin.altitude_asl}};
  jp["min_alt_m"] = sc.plan.min_alt_m;
  jp["max_alt_m"] = sc.plan.max_alt_m;
  jp["track"] = {{"leg_m", sc.plan.track.leg_m},
                 {"radius_m", sc.plan.track.radius_m},
                 {"rotation_deg", sc.plan.track.rotation_deg}};
  jp["phases"] = json::array();
  for (const auto& ph : sc.plan.phases) {
    json jph = {{"kind", std::string(to_string(ph.kind))},
                {"duration_s", ph.duration_s},
                {"target_alt_m", ph.target_alt_m},
                {"speed_mps", ph.speed_mps}};
    if (!ph.name.empty()) jph["name"] = ph.name;
    jp["phases"].push_back(jph);
  }
  j["plan"] = jp;
  if (o.e2e) j["e2e"] = write_e2e(*o.e2e);
  return j.dump(2);
}

SynthResult generate(const Scenario& sc, std::optional<std::uint64_t> seed) {
  PropagationConfig prop = sc.propagation;
  GenerateOptions opts = sc.options;
  if (seed) {
    prop.seed = *seed;
    if (opts.e2e) opts.e2e->seed = *seed;
  }
  if (sc.link == LinkType::Satellite) {
    return generate_satellite(sc.plan, opts.e2e.value_or(starlink_defaults()), opts);
  }
  return generate(sc.sites, prop, sc.plan, opts);
}

std::string truth_to_json(const GroundTruth& truth) {
  json j;
  j["cell_ids"] = truth.cell_ids;
  j["handovers"] = json::array();
  for (const auto& h : truth.handovers) {
    j["handovers"].push_back(
        {{"t_ns", h.t}, {"index", h.sample_index}, {"from", h.from_cell}, {"to", h.to_cell}});
  }
  j["phase_boundaries_ns"] = truth.phase_boundaries;
  j["phase_names"] = truth.phase_names;
  j["serving"] = truth.serving;
  j["rsrp_dbm"] = truth.rsrp_dbm;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Built-in scenarios

std::vector<CellSite> ring_sites(const GeoPosition& centre, std::size_t count, double radius_m,
                                 double antenna_alt_asl_m, double eirp_dbm, CellId first_id) {
  std::vector<CellSite> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    CellSite s;
    s.id = first_id + static_cast<CellId>(i);
    s.position = offset_position(centre, radius_m * std::cos(a), radius_m * std::sin(a),
                                 antenna_alt_asl_m);
    s.eirp_dbm = eirp_dbm;
    out.push_back(s);
  }
  return out;
}

namespace {

constexpr GeoPosition kFieldCentre{49.35, 8.15, kDefaultGroundElevationM};

}  // namespace

Scenario climb_scenario(std::uint64_t seed) {
  Scenario sc;
  sc.link = LinkType::Cellular;
  sc.options.flight_id = "climb-" + std::to_string(seed);
  // Ten omni cells at 2.0-2.9 km on surrounding high ground.
  for (std::size_t i = 0; i < 10; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 10.0 + 0.3;
    const double r = 2000.0 + 100.0 * static_cast<double>(i);
    CellSite s;
    s.id = 101 + static_cast<CellId>(i);
    s.position = offset_position(kFieldCentre, r * std::cos(a), r * std::sin(a), 420.0);
    s.eirp_dbm = 46.0;
    sc.sites.push_back(s);
  }
  sc.propagation.shadow_sigma_db = 0.0;
  sc.propagation.seed = seed;
  sc.plan.origin = kFieldCentre;
  sc.plan.phases = {{PhaseKind::Climb, 1600.0, 400.0, 0.0, "Climb"}};
  return sc;
}

Scenario mission_scenario(std::uint64_t seed) {
  Scenario sc;
  sc.link = LinkType::Cellular;
  sc.options.flight_id = "mission-" + std::to_string(seed);
  // Six three-sector sites; ids are site*10 + sector.
  const double ranges[] = {1800.0, 2600.0, 3400.0, 4300.0, 5200.0, 6500.0};
  const double mast_alt[] = {275.0, 300.0, 265.0, 320.0, 285.0, 340.0};
  for (std::size_t i = 0; i < 6; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 6.0 + 0.5;
    const GeoPosition site = offset_position(kFieldCentre, ranges[i] * std::cos(a),
                                             ranges[i] * std::sin(a), mast_alt[i]);
    for (int sector = 0; sector < 3; ++sector) {
      CellSite s;
      s.id = static_cast<CellId>((i + 1) * 10 + static_cast<std::size_t>(sector) + 1);
      s.position = site;
      s.eirp_dbm = 46.0 + static_cast<double>(i % 3);
      s.sector_azimuth_deg = 120.0 * sector + 30.0 * static_cast<double>(i);
      s.sector_beamwidth_deg = 65.0;
      s.tac = 300 + static_cast<std::int64_t>(i / 3);
      sc.sites.push_back(s);
    }
  }
  sc.propagation.seed = seed;
  sc.propagation.time_to_trigger_samples = 1;
  sc.plan.origin = {kFieldCentre.latitude, kFieldCentre.longitude, 250.0};
  sc.plan.track = {900.0, 300.0, 20.0};
  sc.plan.phases = {
      {PhaseKind::Racetrack, 1800.0, 250.0, 4.0, "Lift-off"},
      {PhaseKind::Climb, 300.0, 330.0, 18.0, "Transition"},
      {PhaseKind::Climb, 900.0, 380.0, 22.0, "Ascent"},
      {PhaseKind::Descend, 960.0, 250.0, 12.0, "Descent"},
  };
  sc.options.e2e = cellular_defaults();
  sc.options.e2e->seed = seed;
  return sc;
}

Scenario starlink_scenario(std::uint64_t seed) {
  Scenario sc = mission_scenario(seed);
  sc.link = LinkType::Satellite;
  sc.sites.clear();
  sc.options.flight_id = "starlink-" + std::to_string(seed);
  sc.options.e2e = starlink_defaults();
  sc.options.e2e->seed = seed;
  return sc;
}

}  // namespace uavnet
