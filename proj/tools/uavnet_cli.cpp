#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "uavnet/dataset_io.hpp"
#include "uavnet/handover.hpp"
#include "uavnet/ingest.hpp"
#include "uavnet/predict.hpp"
#include "uavnet/probe.hpp"
#include "uavnet/report.hpp"
#include "uavnet/stats.hpp"
#include "uavnet/synth.hpp"

namespace fs = std::filesystem;
using namespace uavnet;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct Globals {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string format = "csv";

  TableFormat table_format() const { return parse_table_format(format); }

  fs::path out_path(const std::string& name) const {
    fs::path p(name);
    if (p.is_relative()) p = fs::path(out_dir) / p;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }
};

// "events.csv" -> ("events", path with the extension of the table format).
struct EmitTarget {
  std::string name;
  fs::path path;
};

std::vector<EmitTarget> resolve_emits(const std::vector<std::string>& emits, const Globals& g,
                                      const std::vector<std::string>& allowed) {
  std::vector<EmitTarget> out;
  for (const auto& e : emits) {
    fs::path p(e);
    std::string stem = p.stem().string();
    const std::string ext = p.extension().string();
    std::string name = ext == ".svg" ? stem + ".svg" : stem;
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw std::invalid_argument("unknown emit target '" + e + "' (expected: " + list + ")");
    }
    if (ext != ".svg") p.replace_extension(g.table_format() == TableFormat::Csv ? ".csv" : ".jsonl");
    out.push_back({name, g.out_path(p.string())});
  }
  return out;
}

void emit(const EmitTarget& t, const report::Table& table, const Globals& g) {
  report::write_table_file(t.path.string(), table, g.table_format());
  std::cout << "wrote " << t.path.string() << " (" << table.rows.size() << " rows)\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

FlightDataset load(const std::string& path, const std::string& link) {
  auto parsed = parse_dataset(path, parse_link(link));
  const auto& r = parsed.report;
  if (!r.rejected.empty() || r.reordered > 0) {
    std::cerr << path << ": " << r.rejected.size() << " malformed line(s) skipped, " << r.reordered
              << " out-of-order timestamp(s) re-sorted\n";
  }
  return std::move(parsed.dataset);
}

std::vector<Metric> metric_list(const std::vector<std::string>& names) {
  std::vector<Metric> out;
  for (const auto& n : names) out.push_back(parse_metric(n));
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string link = "cellular";
  bool validate = false;
  std::string out;
  std::size_t show = 20;
};

int run_ingest(const IngestArgs& a, const Globals& g) {
  auto parsed = parse_dataset(a.input, parse_link(a.link));
  const auto& pr = parsed.report;
  std::cout << a.input << ": " << parsed.dataset.samples.size() << " samples (" << to_string(pr.format)
            << "), " << pr.rejected.size() << " malformed, " << pr.reordered << " re-sorted\n";
  for (std::size_t i = 0; i < pr.rejected.size() && i < a.show; ++i) {
    std::cout << "  line " << pr.rejected[i].line << ": " << pr.rejected[i].message << "\n";
  }
  int rc = 0;
  if (a.validate) {
    const auto v = validate_dataset(parsed.dataset);
    std::cout << "validation: " << v.range_violations << " range, " << v.timestamp_regressions
              << " timestamp, " << v.consistency_violations << " consistency violation(s); serving cell id null in "
              << v.null_serving_cell << " sample(s) (" << format_double(100.0 * v.serving_null_fraction) << "%)\n";
    std::size_t shown = 0;
    for (const auto& x : v.violations) {
      if (shown++ >= a.show) break;
      std::cout << "  sample " << x.index << " " << x.field << " " << to_string(x.kind) << ": " << x.detail << "\n";
    }
    if (v.null_warning && !v.null_error) std::cout << "warning: serving cell id null fraction above 0.1%\n";
    if (v.null_error) std::cout << "error: serving cell id null fraction at or above 1%\n";
    std::cout << (v.ok() ? "status: ok\n" : "status: failed\n");
    if (!v.ok()) rc = 2;
  }
  if (!a.out.empty()) {
    const auto p = g.out_path(a.out);
    write_dataset_file(p.string(), parsed.dataset, g.table_format());
    std::cout << "wrote " << p.string() << "\n";
  }
  return rc;
}

struct SynthArgs {
  std::string scenario;
  std::string builtin;
  std::string out = "flight.csv";
  std::string truth;
  std::string dump_scenario;
};

Scenario builtin_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "climb") return climb_scenario(seed);
  if (name == "mission") return mission_scenario(seed);
  if (name == "starlink") return starlink_scenario(seed);
  throw std::invalid_argument("unknown built-in scenario '" + name + "' (climb, mission, starlink)");
}

int run_synth(const SynthArgs& a, const Globals& g) {
  if (a.scenario.empty() == a.builtin.empty()) {
    throw std::invalid_argument("synth: give exactly one of --scenario or --builtin");
  }
  const Scenario sc = a.scenario.empty() ? builtin_scenario(a.builtin, g.seed) : load_scenario(a.scenario);
  if (!a.dump_scenario.empty()) {
    const auto p = g.out_path(a.dump_scenario);
    write_text(p, scenario_to_json(sc) + "\n");
    std::cout << "wrote " << p.string() << "\n";
  }
  const auto result = generate(sc, g.seed);
  const auto p = g.out_path(a.out);
  write_dataset_file(p.string(), result.dataset, g.table_format());
  std::cout << "wrote " << p.string() << " (" << result.dataset.samples.size() << " samples, "
            << result.truth.handovers.size() << " handovers)\n";
  if (!a.truth.empty()) {
    const auto tp = g.out_path(a.truth);
    write_text(tp, truth_to_json(result.truth) + "\n");
    std::cout << "wrote " << tp.string() << "\n";
  }
  return 0;
}

struct ProbeServerArgs {
  std::string bind = "0.0.0.0:9000";
  double duration_s = 0.0;
};

int run_probe_server(const ProbeServerArgs& a) {
  probe::Server server;
  server.start(probe::parse_endpoint(a.bind));
  std::cout << "listening on port " << server.port() << " (udp echo, tcp throughput)" << std::endl;
  const auto start = std::chrono::steady_clock::now();
  while (!g_stop.load()) {
    if (a.duration_s > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= a.duration_s) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  std::cout << "echoed " << server.echoed() << " packet(s), ignored " << server.dropped_malformed()
            << " malformed\n";
  return 0;
}

struct ProbeClientArgs {
  std::string server;
  std::uint64_t count = 60;
  double interval_s = 1.0;
  double timeout_s = 2.0;
  double throughput_every_s = 60.0;
  std::uint16_t throughput_duration_s = 5;
  std::string out = "records.csv";
  std::string link = "cellular";
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;
};

int run_probe_client(const ProbeClientArgs& a, const Globals& g) {
  probe::SchedulerConfig cfg;
  cfg.server = probe::parse_endpoint(a.server);
  cfg.echo_interval_s = a.interval_s;
  cfg.run_s = static_cast<double>(a.count) * a.interval_s;
  cfg.echo_timeout_s = a.timeout_s;
  cfg.throughput_every_s = a.throughput_every_s;
  cfg.throughput_duration_s = a.throughput_duration_s;
  cfg.stop = &g_stop;
  const auto records = probe::run_scheduler(cfg);
  const auto ds = probe::records_to_dataset(records, {a.lat, a.lon, a.alt}, "probe", parse_link(a.link));
  const auto totals = delivery_totals(ds);
  const auto p = g.out_path(a.out);
  write_dataset_file(p.string(), ds, g.table_format());
  std::cout << "sent " << totals.sent << ", delivered " << totals.delivered;
  if (totals.sent > 0) std::cout << " (" << format_double(delivery_rate(totals.sent, totals.delivered)) << "%)";
  std::cout << "\nwrote " << p.string() << "\n";
  return 0;
}

struct HandoverArgs {
  std::string input;
  std::string link = "cellular";
  HandoverThresholds th;
  double bin_minutes = 10.0;
  RttImpactOptions impact;
  std::string phases;
  std::vector<std::string> phase_names;
  std::string truth;
  std::vector<std::string> emit{"events.csv"};
};

std::vector<PhaseSegment> phases_for(const FlightDataset& ds, const HandoverArgs& a) {
  std::vector<TimestampNs> bounds;
  std::vector<std::string> names = a.phase_names;
  if (!a.truth.empty()) {
    const auto j = nlohmann::json::parse(read_text(a.truth));
    bounds = j.at("phase_boundaries_ns").get<std::vector<TimestampNs>>();
    if (names.empty()) names = j.at("phase_names").get<std::vector<std::string>>();
  } else if (!a.phases.empty()) {
    const auto t0 = ds.samples.front().timestamp;
    for (double s : parse_doubles(a.phases)) bounds.push_back(t0 + static_cast<TimestampNs>(std::llround(s * 1e9)));
  } else if (names.empty()) {
    names = {"flight"};
  }
  return segment_phases(ds, bounds, names);
}

int run_handover(const HandoverArgs& a, const Globals& g) {
  a.th.check();
  const auto targets = resolve_emits(a.emit, g, {"events", "rate", "impact", "visibility"});
  const auto ds = load(a.input, a.link);
  auto events = detect_and_classify(ds, a.th);
  std::array<std::size_t, kCauseCount> per{};
  for (const auto& e : events) ++per[static_cast<std::size_t>(e.cause)];
  std::cout << events.size() << " handover(s): E1 " << per[0] << ", E2 " << per[1] << ", E3 " << per[2]
            << ", E4 " << per[3] << "\n";
  const auto impact = rtt_impact(events, ds, a.impact);
  for (const auto& t : targets) {
    if (t.name == "events") emit(t, report::events_table(impact.events), g);
    if (t.name == "rate") emit(t, report::rate_table(handover_rate(events, ds, a.bin_minutes), a.bin_minutes), g);
    if (t.name == "impact") {
      const auto& s = impact.summary;
      std::cout << "rtt impact: " << s.n_improve << " improve, " << s.n_degrade << " degrade, " << s.n_unchanged
                << " unchanged, " << s.n_missing << " missing\n";
      emit(t, report::impact_table(impact), g);
    }
    if (t.name == "visibility") emit(t, report::visibility_table(cell_visibility(ds, phases_for(ds, a), events)), g);
  }
  return 0;
}

struct StatsArgs {
  std::vector<std::string> inputs;
  std::string link = "cellular";
  std::vector<std::string> metrics{"rsrp", "rsrq", "rssi", "sinr", "rtt", "dl", "ul"};
  std::string grid_metric = "rsrp";
  double bin_width = 10.0;
  bool agl = false;
  double ground = kDefaultGroundElevationM;
  std::string voxel = "50,50,10";
  QualityThresholds th;
  std::size_t band_points = kDefaultBandPoints;
  std::vector<std::string> emit{"cdf.csv"};
};

int run_stats(const StatsArgs& a, const Globals& g) {
  const auto targets = resolve_emits(
      a.emit, g, {"cdf", "threshold", "profile", "dominance", "grid", "grid.svg", "band"});
  std::vector<FlightDataset> sets;
  for (const auto& in : a.inputs) sets.push_back(load(in, a.link));
  const auto& ds = sets.front();
  const auto metrics = metric_list(a.metrics);
  const Metric grid_metric = parse_metric(a.grid_metric);

  std::optional<VoxelGrid> grid;
  auto need_grid = [&]() -> const VoxelGrid& {
    if (!grid) {
      const auto v = parse_doubles(a.voxel);
      if (v.size() != 3) throw std::invalid_argument("--voxel expects dx,dy,dz");
      grid = voxelize(ds, grid_metric, {v[0], v[1], v[2]});
    }
    return *grid;
  };

  for (const auto& t : targets) {
    if (t.name == "cdf") emit(t, report::cdf_table(ds, metrics), g);
    if (t.name == "threshold") emit(t, report::threshold_table(threshold_report(ds, a.th)), g);
    if (t.name == "profile") {
      BinningOptions b;
      b.width_m = a.bin_width;
      b.reference = a.agl ? AltitudeReference::Agl : AltitudeReference::Asl;
      b.ground_elevation_m = a.ground;
      emit(t, report::profile_table(ds, metrics, b), g);
    }
    if (t.name == "dominance") emit(t, report::dominance_table(dominance(ds)), g);
    if (t.name == "grid") emit(t, report::grid_table(need_grid()), g);
    if (t.name == "grid.svg") {
      write_text(t.path, report::grid_svg(need_grid()));
      std::cout << "wrote " << t.path.string() << "\n";
    }
    if (t.name == "band") {
      if (sets.size() < 2) throw std::invalid_argument("band needs at least two --input files");
      std::vector<EmpiricalCdf> cdfs;
      for (const auto& s : sets) cdfs.emplace_back(metric_series(s, grid_metric));
      const auto grid_pts = pooled_grid(cdfs, a.band_points);
      emit(t, report::band_table(mean_cdf_band(cdfs, grid_pts), grid_metric), g);
    }
  }
  return 0;
}

struct CompareArgs {
  std::string cellular;
  std::string satellite;
  std::vector<std::string> emit{"compare.csv"};
};

int run_compare(const CompareArgs& a, const Globals& g) {
  const auto targets = resolve_emits(a.emit, g, {"compare", "cdf"});
  const auto cell = load(a.cellular, "cellular");
  const auto sat = load(a.satellite, "satellite");
  const auto cmp = report::compare(cell, sat);
  for (const auto& l : cmp.links) {
    std::cout << l.label << ": F(50ms) " << (l.rtt_f50 ? format_double(*l.rtt_f50) : "-") << ", F(150ms) "
              << (l.rtt_f150 ? format_double(*l.rtt_f150) : "-") << ", delivery "
              << (l.delivery_pct ? format_double(*l.delivery_pct) + "%" : "-") << "\n";
  }
  for (const auto& t : targets) {
    if (t.name == "compare") emit(t, report::compare_table(cmp), g);
    if (t.name == "cdf") emit(t, report::compare_cdf_table({{"cellular", &cell}, {"satellite", &sat}}), g);
  }
  return 0;
}

struct PredictArgs {
  std::string input;
  std::string link = "cellular";
  std::vector<std::string> metrics{"rsrp"};
  std::vector<std::string> models{"rf"};
  std::string out = "model.json";
  std::vector<std::string> protocols{"loao", "split"};
  double bin_width = 10.0;
  bool edge_bins = false;
  double test_fraction = 0.2;
  predict::Hyperparams hp;
  std::vector<std::string> emit{"report.csv"};
};

int run_predict_train(const PredictArgs& a, const Globals& g) {
  if (a.metrics.size() != 1 || a.models.size() != 1) {
    throw std::invalid_argument("predict train takes one --metric and one --model");
  }
  const auto ds = load(a.input, a.link);
  const auto metric = parse_metric(a.metrics.front());
  const auto rows = predict::rows_from_dataset(ds, metric);
  auto model = predict::fit(rows.rows, predict::parse_model_kind(a.models.front()), a.hp, g.seed, metric);
  model.set_origin(rows.origin);
  const auto p = g.out_path(a.out);
  model.save(p.string());
  std::cout << "trained " << predict::to_string(model.kind()) << " on " << rows.rows.size() << " rows of "
            << to_string(metric) << "\nwrote " << p.string() << "\n";
  return 0;
}

int run_predict_eval(const PredictArgs& a, const Globals& g) {
  const auto targets = resolve_emits(a.emit, g, {"report"});
  const auto ds = load(a.input, a.link);
  std::vector<predict::EvalReport> reports;
  for (const auto& mname : a.metrics) {
    const auto metric = parse_metric(mname);
    const auto rows = predict::rows_from_dataset(ds, metric).rows;
    for (const auto& kname : a.models) {
      const auto kind = predict::parse_model_kind(kname);
      for (const auto& pname : a.protocols) {
        const auto proto = predict::parse_protocol(pname);
        if (proto == predict::Protocol::Loao) {
          predict::LoaoOptions o;
          o.bin_width_m = a.bin_width;
          if (a.edge_bins) o.holdout_bins = predict::edge_bins(rows, a.bin_width);
          reports.push_back(predict::eval_loao(rows, kind, o, g.seed, a.hp, metric));
        } else {
          reports.push_back(predict::eval_split(rows, kind, a.test_fraction, g.seed, a.hp, metric));
        }
        const auto& r = reports.back();
        std::cout << to_string(metric) << " " << kname << " " << pname << ": MAE " << format_double(r.pooled.mae)
                  << ", RMSE " << format_double(r.pooled.rmse) << " (" << r.n_test << " held-out rows"
                  << (proto == predict::Protocol::Loao ? ", pooled over folds" : "") << ")\n";
      }
    }
  }
  for (const auto& t : targets) emit(t, report::eval_table(reports), g);
  return 0;
}

void add_threshold_flags(CLI::App* cmd, HandoverThresholds& th) {
  cmd->add_option("--a3-delta", th.a3_delta_db, "E1 neighbor margin (dB)")->capture_default_str();
  cmd->add_option("--e2-rsrp", th.e2_rsrp_dbm, "E2 serving RSRP floor (dBm)")->capture_default_str();
  cmd->add_option("--e2-rsrq", th.e2_rsrq_db, "E2 serving RSRQ ceiling (dB)")->capture_default_str();
  cmd->add_option("--e3-rsrp", th.e3_rsrp_dbm, "E3 serving RSRP ceiling (dBm)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV network measurement toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "jsonl"}))->capture_default_str();

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse and validate a flight log");
  ingest_cmd->add_option("--input", ingest.input, "Flight log (csv or jsonl)")->required();
  ingest_cmd->add_option("--link", ingest.link)->check(CLI::IsMember({"cellular", "satellite"}))->capture_default_str();
  ingest_cmd->add_flag("--validate", ingest.validate, "Run range/ordering/consistency checks");
  ingest_cmd->add_option("--out", ingest.out, "Write the normalized dataset");
  ingest_cmd->add_option("--show", ingest.show, "Diagnostics to print")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic flight with ground truth");
  synth_cmd->add_option("--scenario", synth.scenario, "Scenario file (json)");
  synth_cmd->add_option("--builtin", synth.builtin, "Built-in scenario: climb, mission, starlink");
  synth_cmd->add_option("--out", synth.out, "Flight dataset")->capture_default_str();
  synth_cmd->add_option("--truth", synth.truth, "Ground-truth json");
  synth_cmd->add_option("--dump-scenario", synth.dump_scenario, "Also write the scenario json");

  auto* probe_cmd = app.add_subcommand("probe", "Live RTT and throughput probes");
  probe_cmd->require_subcommand(1);
  ProbeServerArgs server;
  auto* server_cmd = probe_cmd->add_subcommand("server", "Echo and throughput responder");
  server_cmd->add_option("--bind", server.bind, "host:port")->capture_default_str();
  server_cmd->add_option("--duration", server.duration_s, "Stop after N seconds (0 = until interrupted)");
  ProbeClientArgs client;
  auto* client_cmd = probe_cmd->add_subcommand("client", "Run scheduled probes against a server");
  client_cmd->add_option("--server", client.server, "host:port")->required();
  client_cmd->add_option("--count", client.count, "Echo requests")->capture_default_str();
  client_cmd->add_option("--interval", client.interval_s, "Seconds between echoes")->capture_default_str();
  client_cmd->add_option("--timeout", client.timeout_s, "Echo timeout (s)")->capture_default_str();
  client_cmd->add_option("--throughput-every", client.throughput_every_s, "Seconds between transfers (0 = off)")
      ->capture_default_str();
  client_cmd->add_option("--throughput-duration", client.throughput_duration_s, "Seconds per direction")
      ->capture_default_str();
  client_cmd->add_option("--out", client.out, "Records dataset")->capture_default_str();
  client_cmd->add_option("--link", client.link)->check(CLI::IsMember({"cellular", "satellite"}))->capture_default_str();
  client_cmd->add_option("--lat", client.lat);
  client_cmd->add_option("--lon", client.lon);
  client_cmd->add_option("--alt", client.alt);

  auto* analyze_cmd = app.add_subcommand("analyze", "Handover, statistics and link comparison");
  analyze_cmd->require_subcommand(1);
  HandoverArgs ho;
  auto* ho_cmd = analyze_cmd->add_subcommand("handover", "Detect and classify handovers");
  ho_cmd->add_option("--input", ho.input)->required();
  ho_cmd->add_option("--link", ho.link)->check(CLI::IsMember({"cellular", "satellite"}))->capture_default_str();
  add_threshold_flags(ho_cmd, ho.th);
  ho_cmd->add_option("--bin-minutes", ho.bin_minutes, "Rate bin width")->capture_default_str();
  ho_cmd->add_option("--window", ho.impact.window_s, "RTT impact window (s)")->capture_default_str();
  ho_cmd->add_option("--k", ho.impact.k, "RTT samples per side")->capture_default_str();
  ho_cmd->add_option("--phases", ho.phases, "Phase boundaries, seconds from the first sample (comma separated)");
  ho_cmd->add_option("--phase-names", ho.phase_names)->delimiter(',');
  ho_cmd->add_option("--truth", ho.truth, "Take phases from a synth ground-truth file");
  ho_cmd->add_option("--emit", ho.emit, "events, rate, impact, visibility")->delimiter(',')->capture_default_str();

  StatsArgs st;
  auto* st_cmd = analyze_cmd->add_subcommand("stats", "Distributions, profiles, dominance and grids");
  st_cmd->add_option("--input", st.inputs, "One or more flight logs (band needs two or more)")->required();
  st_cmd->add_option("--link", st.link)->check(CLI::IsMember({"cellular", "satellite"}))->capture_default_str();
  st_cmd->add_option("--metrics", st.metrics, "Metrics for cdf/profile")->delimiter(',')->capture_default_str();
  st_cmd->add_option("--metric", st.grid_metric, "Metric for grid and band")->capture_default_str();
  st_cmd->add_option("--bin-width", st.bin_width, "Altitude bin (m)")->capture_default_str();
  st_cmd->add_flag("--agl", st.agl, "Bin altitude above ground");
  st_cmd->add_option("--ground", st.ground, "Ground elevation for --agl (m ASL)")->capture_default_str();
  st_cmd->add_option("--voxel", st.voxel, "dx,dy,dz (m)")->capture_default_str();
  st_cmd->add_option("--rsrp-poor", st.th.rsrp_poor)->capture_default_str();
  st_cmd->add_option("--rsrq-poor", st.th.rsrq_poor)->capture_default_str();
  st_cmd->add_option("--rssi-poor", st.th.rssi_poor)->capture_default_str();
  st_cmd->add_option("--sinr-poor", st.th.sinr_poor)->capture_default_str();
  st_cmd->add_option("--band-points", st.band_points)->capture_default_str();
  st_cmd->add_option("--emit", st.emit, "cdf, threshold, profile, dominance, grid, grid.svg, band")
      ->delimiter(',')
      ->capture_default_str();

  CompareArgs cmp;
  auto* cmp_cmd = analyze_cmd->add_subcommand("compare", "Cellular versus satellite end-to-end metrics");
  cmp_cmd->add_option("--cellular", cmp.cellular)->required();
  cmp_cmd->add_option("--satellite", cmp.satellite)->required();
  cmp_cmd->add_option("--emit", cmp.emit, "compare, cdf")->delimiter(',')->capture_default_str();

  auto* predict_cmd = app.add_subcommand("predict", "3D signal prediction");
  predict_cmd->require_subcommand(1);
  PredictArgs pa;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--input", pa.input)->required();
    c->add_option("--link", pa.link)->check(CLI::IsMember({"cellular", "satellite"}))->capture_default_str();
    c->add_option("--metric", pa.metrics, "rsrp, rsrq, rssi, sinr")->delimiter(',')->capture_default_str();
    c->add_option("--model", pa.models, "rf, gb, mlp")->delimiter(',')->capture_default_str();
    c->add_option("--trees", pa.hp.n_trees)->capture_default_str();
    c->add_option("--max-depth", pa.hp.max_depth)->capture_default_str();
    c->add_option("--rounds", pa.hp.boost_rounds)->capture_default_str();
    c->add_option("--epochs", pa.hp.epochs)->capture_default_str();
  };
  auto* train_cmd = predict_cmd->add_subcommand("train", "Fit and save a model");
  add_common(train_cmd);
  train_cmd->add_option("--out", pa.out, "Model file")->capture_default_str();
  auto* eval_cmd = predict_cmd->add_subcommand("eval", "LOAO and 80/20 evaluation");
  add_common(eval_cmd);
  eval_cmd->add_option("--protocol", pa.protocols, "loao, split")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--bin-width", pa.bin_width, "LOAO altitude bin (m)")->capture_default_str();
  eval_cmd->add_flag("--edge-bins", pa.edge_bins, "Hold out only the lowest and highest bins");
  eval_cmd->add_option("--test-fraction", pa.test_fraction)->capture_default_str();
  eval_cmd->add_option("--emit", pa.emit, "report")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*ingest_cmd) return run_ingest(ingest, g);
    if (*synth_cmd) return run_synth(synth, g);
    if (*server_cmd) return run_probe_server(server);
    if (*client_cmd) return run_probe_client(client, g);
    if (*ho_cmd) return run_handover(ho, g);
    if (*st_cmd) return run_stats(st, g);
    if (*cmp_cmd) return run_compare(cmp, g);
    if (*train_cmd) return run_predict_train(pa, g);
    if (*eval_cmd) return run_predict_eval(pa, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
