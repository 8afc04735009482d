// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/net_shims.hpp"
#include "uavnet/dataset_io.hpp"
#include "uavnet/handover.hpp"
#include "uavnet/predict.hpp"
#include "uavnet/probe.hpp"
#include "uavnet/stats.hpp"
#include "uavnet/synth.hpp"

namespace fs = std::filesystem;
using namespace uavnet;
using namespace uavnet::testing;

namespace {

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string csv_of(const FlightDataset& ds) {
  std::ostringstream os;
  write_dataset(os, ds, TableFormat::Csv);
  return os.str();
}

// 1 ------------------------------------------------------------------------

void classification_table(Check& c) {
  struct Case {
    std::optional<double> rsrp, rsrq, nb;
    HandoverCause want;
    const char* label;
  };
  const std::vector<Case> canonical = {
      {-100, -10, -96, HandoverCause::E1, "neighbor +4 dB"},
      {-90, -19, -89, HandoverCause::E2, "strong but poor quality"},
      {-112, -12, -111, HandoverCause::E3, "weak serving"},
      {-100, -15, -99, HandoverCause::E4, "no guard holds"},
  };
  const std::vector<Case> boundary = {
      {-100, -10, -97, HandoverCause::E1, "delta exactly 3.0"},
      {-100, -10, -97.0000001, HandoverCause::E4, "delta just below 3.0"},
      {-95, -18, std::nullopt, HandoverCause::E4, "rsrp -95.0 is not above -95"},
      {-95, -18, -94, HandoverCause::E4, "rsrp -95.0 with delta 1"},
      {-94.999, -18, std::nullopt, HandoverCause::E2, "rsrq exactly -18.0 counts as poor"},
      {-90, -17.999, std::nullopt, HandoverCause::E4, "rsrq just above -18"},
      {-110, -12, std::nullopt, HandoverCause::E3, "rsrp exactly -110.0"},
      {-109.999, -12, std::nullopt, HandoverCause::E4, "rsrp just above -110"},
      {-115, -12, -112, HandoverCause::E1, "E1 wins over E3"},
      {-90, -20, -85, HandoverCause::E1, "E1 wins over E2"},
      {std::nullopt, -20, -85, HandoverCause::E4, "null serving rsrp disables every guard"},
      {-120, std::nullopt, std::nullopt, HandoverCause::E3, "null rsrq and neighbor still allow E3"},
  };
  for (const auto* set : {&canonical, &boundary}) {
    for (const auto& k : *set) {
      const auto got = classify_handover({k.rsrp, k.rsrq, k.nb});
      c.expect(got == k.want, std::string(k.label) + ": got " + std::string(to_string(got)));
    }
  }
  c.note = std::to_string(canonical.size()) + " canonical + " + std::to_string(boundary.size()) + " boundary cases";
}

// 2 ------------------------------------------------------------------------

struct Change {
  std::size_t index;
  CellId from, to;
  bool operator==(const Change&) const = default;
};

// Adjacent-inequality scan over non-null serving ids.
std::vector<Change> brute_force_changes(const FlightDataset& ds) {
  std::vector<Change> out;
  std::optional<CellId> last;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    if (!s.serving || !s.serving->cell_id) continue;
    const CellId id = *s.serving->cell_id;
    if (last && *last != id) out.push_back({i, *last, id});
    last = id;
  }
  return out;
}

std::vector<Change> detected(const FlightDataset& ds) {
  std::vector<Change> out;
  for (const auto& e : detect_and_classify(ds)) {
    out.push_back({e.sample_index, e.from_cell, e.to_cell});
    if (e.t != ds.samples[e.sample_index].timestamp) out.back().index = ~std::size_t{0};
  }
  return out;
}

void detection_oracle(Check& c) {
  std::size_t events = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto r = generate(mission_scenario(seed));
    std::vector<Change> truth;
    for (const auto& h : r.truth.handovers) {
      truth.push_back({h.sample_index, h.from_cell, h.to_cell});
      c.expect(r.dataset.samples[h.sample_index].timestamp == h.t, "truth time mismatch, seed " + std::to_string(seed));
    }
    const auto got = detected(r.dataset);
    c.expect(got == truth, "events differ from ground truth, seed " + std::to_string(seed));
    events += got.size();

    auto sc = mission_scenario(seed);
    sc.options.null_injection_prob = 0.02;
    const auto nr = generate(sc);
    c.expect(detected(nr.dataset) == brute_force_changes(nr.dataset),
             "events differ from brute-force scan with nulls, seed " + std::to_string(seed));
  }
  c.note = "50 flights, " + std::to_string(events) + " events";
}

// 3 ------------------------------------------------------------------------

void delivery_arithmetic(Check& c) {
  const double cell = delivery_rate(5159, 5130);
  const double sat = delivery_rate(3627, 3602);
  c.expect(fmt(cell, 2) == "99.44", "cellular " + fmt(cell, 6));
  c.expect(fmt(sat, 2) == "99.31", "satellite " + fmt(sat, 6));
  c.note = "cellular " + fmt(cell, 2) + ", satellite " + fmt(sat, 2);
}

// 4 ------------------------------------------------------------------------

void error_metrics(Check& c) {
  const std::vector<double> y = {0, 0}, yhat = {3, 4};
  const auto e = predict::metrics(y, yhat);
  c.expect(std::abs(e.mae - 3.5) <= 1e-9, "mae " + fmt(e.mae, 12));
  c.expect(std::abs(e.rmse - std::sqrt(12.5)) <= 1e-9, "rmse " + fmt(e.rmse, 12));
  Rng rng(404);
  for (int i = 0; i < 1000; ++i) {
    const auto n = 1 + rng.below(64);
    std::vector<double> a, b;
    for (std::uint64_t k = 0; k < n; ++k) {
      a.push_back(rng.normal(-90, 15));
      b.push_back(rng.bernoulli(0.05) ? a.back() : rng.normal(-90, 15));
    }
    const auto m = predict::metrics(a, b);
    c.expect(m.rmse >= m.mae - 1e-12 * std::max(1.0, m.mae), "rmse < mae on vector " + std::to_string(i));
  }
  c.note = "mae " + fmt(e.mae, 4) + ", rmse " + fmt(e.rmse, 5) + ", 1000 random pairs";
}

// 5 ------------------------------------------------------------------------

void cdf_properties(Check& c) {
  Rng rng(55);
  for (int t = 0; t < 100; ++t) {
    const auto n = 1 + rng.below(200);
    std::vector<double> v;
    for (std::uint64_t i = 0; i < n; ++i) v.push_back(std::round(rng.normal(0, 10) * 4.0) / 4.0);
    const EmpiricalCdf f(v);
    double prev = 0.0;
    std::vector<double> probes = v;
    probes.push_back(f.min() - 1.0);
    probes.push_back(f.max() + 1.0);
    std::sort(probes.begin(), probes.end());
    for (double x : probes) {
      const double y = f.eval(x);
      std::size_t below = 0;
      for (double u : v) below += u <= x ? 1 : 0;
      c.expect(y == static_cast<double>(below) / static_cast<double>(n), "F(x) is not the order-statistic fraction");
      c.expect(y >= prev && y >= 0.0 && y <= 1.0, "F not monotone or out of range");
      prev = y;
    }
  }
  const auto sat = generate(starlink_scenario(1));
  const EmpiricalCdf rtt(metric_series(sat.dataset, Metric::Rtt));
  const double q95 = rtt.quantile(0.95);
  c.expect(q95 < 50.0, "Q(0.95) of satellite RTT " + fmt(q95, 2));
  c.note = "100 arrays; satellite RTT Q(0.95) = " + fmt(q95, 2) + " ms over " + std::to_string(rtt.size());
}

// 6 ------------------------------------------------------------------------

void altitude_trend(Check& c) {
  std::string sinr_notes;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto sc = climb_scenario(seed);
    sc.propagation.shadow_sigma_db = 0.0;
    c.expect(sc.sites.size() == 10, "climb scenario should have 10 sites");
    const auto r = generate(sc);
    const auto bins = bin_by_altitude(r.dataset);
    const auto rsrp = altitude_profile(bins, Metric::Rsrp);
    const auto sinr = altitude_profile(bins, Metric::Sinr);
    const auto s = std::to_string(seed);
    c.expect(rsrp.size() == 16, "seed " + s + ": " + std::to_string(rsrp.size()) + " rsrp bins");
    for (std::size_t i = 1; i < rsrp.size(); ++i) {
      c.expect(rsrp[i].stats.mean >= rsrp[i - 1].stats.mean, "seed " + s + ": rsrp decreases at bin " + std::to_string(i));
    }
    if (sinr.size() < 6) {
      c.expect(false, "seed " + s + ": too few sinr bins");
      continue;
    }
    double bottom = 0.0, top = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      bottom += sinr[i].stats.mean / 3.0;
      top += sinr[sinr.size() - 1 - i].stats.mean / 3.0;
    }
    c.expect(top < bottom, "seed " + s + ": top sinr " + fmt(top, 1) + " >= bottom " + fmt(bottom, 1));
    if (seed == 1) sinr_notes = "seed 1 sinr bottom " + fmt(bottom, 1) + " dB, top " + fmt(top, 1) + " dB";
  }
  c.note = "5 seeds; " + sinr_notes;
}

// 7 ------------------------------------------------------------------------

std::vector<predict::TrainingRow> smooth_trend(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<predict::TrainingRow> rows;
  for (int i = 0; i < 600; ++i) {
    const double x = rng.uniform(-500, 500), y = rng.uniform(-500, 500), a = rng.uniform(240, 400);
    rows.push_back({{x, y, a}, -110.0 + 0.08 * (a - 240.0) + 2.0 * std::sin(x / 200.0) + rng.normal(0, 1.0)});
  }
  return rows;
}

void loao_protocol(Check& c) {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rows = smooth_trend(seed);
    predict::LoaoOptions all;
    all.bin_width_m = 20.0;
    const auto full = predict::eval_loao(rows, predict::ModelKind::BoostedTrees, all, seed);
    predict::LoaoOptions edges = all;
    edges.holdout_bins = predict::edge_bins(rows, all.bin_width_m);
    const auto loao = predict::eval_loao(rows, predict::ModelKind::TreeEnsemble, edges, seed);
    for (const auto* rep : {&full, &loao}) {
      std::size_t tested = 0;
      for (const auto& f : rep->folds) {
        std::set<std::size_t> train(f.train_index.begin(), f.train_index.end());
        for (auto i : f.test_index) c.expect(train.count(i) == 0, "fold " + f.label + " leaks row " + std::to_string(i));
        for (auto i : f.train_index) {
          c.expect(static_cast<std::int64_t>(std::floor(rows[i].features.alt_m / all.bin_width_m)) != *f.altitude_bin,
                   "held-out bin present in training, fold " + f.label);
        }
        tested += f.test_index.size();
      }
      c.expect(tested == rep->n_test, "n_test mismatch");
    }
    const auto split = predict::eval_split(rows, predict::ModelKind::TreeEnsemble, 0.2, seed);
    const std::set<std::size_t> train(split.folds[0].train_index.begin(), split.folds[0].train_index.end());
    for (auto i : split.folds[0].test_index) c.expect(train.count(i) == 0, "split leaks row " + std::to_string(i));
    if (loao.pooled.rmse > split.pooled.rmse) ++wins;
    if (seed == 1) detail = "seed 1 LOAO " + fmt(loao.pooled.rmse, 2) + " vs split " + fmt(split.pooled.rmse, 2);
  }
  c.expect(wins >= 4, "LOAO RMSE exceeded split RMSE in only " + std::to_string(wins) + " of 5 seeds");
  c.note = std::to_string(wins) + "/5 seeds; " + detail;
}

// 8 ------------------------------------------------------------------------

void probe_integration(Check& c) {
  probe::Server server;
  server.start({"127.0.0.1", 0});
  probe::EchoOptions o;
  o.count = 100;
  o.interval_s = 0.01;
  o.timeout_s = 1.0;
  const auto direct = probe::echo_client({"127.0.0.1", server.port()}, o);
  std::vector<std::optional<double>> rtt;
  for (const auto& r : direct.records) rtt.push_back(r.rtt_ms);
  const auto s = summarize(rtt);
  c.expect(direct.delivery_pct() == 100.0, "loopback delivery " + fmt(direct.delivery_pct(), 2));
  c.expect(s && s->median < 5.0, "loopback median rtt");

  double dropped_pct = 0.0;
  {
    DropRelay relay(server.port(), [](std::uint64_t n) { return n % 20 == 0; });
    o.interval_s = 0.005;
    o.timeout_s = 0.5;
    const auto r = probe::echo_client({"127.0.0.1", relay.port()}, o);
    dropped_pct = r.delivery_pct();
    c.expect(fmt(dropped_pct, 2) == "95.00", "1-in-20 drop delivery " + fmt(dropped_pct, 4));
  }
  server.stop();

  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const probe::EchoPacket p{rng.bernoulli(0.5) ? probe::EchoKind::Reply : probe::EchoKind::Request, rng.next(),
                              rng.next()};
    c.expect(probe::decode_echo(probe::encode(p)) == p, "echo round trip");
  }
  const auto good = probe::encode(probe::EchoPacket{});
  for (std::size_t n = 0; n <= 64; ++n) {
    if (n == probe::kEchoPacketSize) continue;
    std::vector<std::uint8_t> bytes(n);
    std::copy_n(good.begin(), std::min(n, good.size()), bytes.begin());
    c.expect(!probe::decode_echo(bytes), "accepted length " + std::to_string(n));
  }
  c.note = "loopback " + fmt(direct.delivery_pct(), 2) + "%, median " + fmt(s ? s->median : -1.0, 3) +
           " ms; drop shim " + fmt(dropped_pct, 2) + "%";
}

// 9 ------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(UAVNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void determinism(Check& c) {
  for (const auto& make : {mission_scenario, climb_scenario, starlink_scenario}) {
    c.expect(csv_of(generate(make(21)).dataset) == csv_of(generate(make(21)).dataset), "synth output differs");
  }
  const auto rows = smooth_trend(9);
  std::vector<predict::FeatureRow> x;
  for (const auto& r : rows) x.push_back(r.features);
  predict::Hyperparams hp;
  hp.n_trees = 50;
  hp.boost_rounds = 100;
  hp.epochs = 30;
  for (auto k : {predict::ModelKind::TreeEnsemble, predict::ModelKind::BoostedTrees,
                 predict::ModelKind::FeedforwardNet}) {
    const auto a = predict::fit(rows, k, hp, 13);
    const auto b = predict::fit(rows, k, hp, 13);
    c.expect(a.predict(x) == b.predict(x), "predictions differ for " + std::string(to_string(k)));
    c.expect(a.to_json() == b.to_json(), "model files differ for " + std::string(to_string(k)));
  }

  const fs::path root = fs::temp_directory_path() / "uavnet_acceptance_cli";
  fs::remove_all(root);
  std::size_t files = 0;
  for (const char* run : {"a", "b"}) {
    const std::string d = (root / run).string();
    const std::string flight = d + "/mission.csv";
    bool ok = run_cli("--seed 4 --out-dir " + d + " synth --builtin mission --out mission.csv --truth truth.json") == 0;
    ok = ok && run_cli("--seed 4 --out-dir " + d + " synth --builtin starlink --out starlink.csv") == 0;
    ok = ok && run_cli("--out-dir " + d + " analyze handover --input " + flight + " --truth " + d +
                       "/truth.json --emit events,rate,impact,visibility") == 0;
    ok = ok && run_cli("--out-dir " + d + " analyze stats --input " + flight +
                       " --emit cdf,threshold,profile,dominance,grid,grid.svg") == 0;
    ok = ok && run_cli("--out-dir " + d + " analyze compare --cellular " + flight + " --satellite " + d +
                       "/starlink.csv --emit compare,cdf") == 0;
    ok = ok && run_cli("--seed 4 --out-dir " + d + " predict eval --input " + flight +
                       " --model rf,gb --trees 30 --rounds 60 --protocol split --emit report") == 0;
    c.expect(ok, std::string("cli run ") + run + " failed");
  }
  for (const auto& e : fs::directory_iterator(root / "a")) {
    const auto other = root / "b" / e.path().filename();
    c.expect(fs::exists(other) && slurp(e.path()) == slurp(other), "cli output differs: " + e.path().filename().string());
    ++files;
  }
  c.expect(files >= 10, "too few cli outputs: " + std::to_string(files));
  fs::remove_all(root);
  c.note = "3 scenarios, 3 model kinds, " + std::to_string(files) + " CLI files";
}

// 10 -----------------------------------------------------------------------

void partitions(Check& c) {
  Rng rng(1010);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<Sample> samples;
    const auto n = 50 + rng.below(500);
    const auto n_cells = 1 + rng.below(30);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::optional<CellId> cell;
      if (!rng.bernoulli(0.05)) cell = static_cast<CellId>(1000 + rng.below(n_cells));
      std::optional<double> rsrp;
      if (!rng.bernoulli(0.1)) rsrp = rng.uniform(-140, -50);
      auto s = cell_sample(static_cast<double>(i), cell, rsrp);
      s.position = {47.0 + rng.uniform(0, 0.01), 9.0 + rng.uniform(0, 0.01), rng.uniform(200, 450)};
      samples.push_back(s);
    }
    if (!samples.front().serving->cell_id) samples.front().serving->cell_id = 1000;
    const auto ds = dataset_of(samples);
    double sum = 0.0;
    for (const auto& share : dominance(ds)) sum += share.share;
    worst = std::max(worst, std::abs(sum - 1.0));
    c.expect(std::abs(sum - 1.0) <= 1e-9, "dominance shares sum to " + fmt(sum, 12));
    std::size_t non_null = 0;
    for (const auto& v : metric_series(ds, Metric::Rsrp)) non_null += v ? 1 : 0;
    const VoxelSize size{rng.uniform(10, 100), rng.uniform(10, 100), rng.uniform(5, 20)};
    c.expect(voxelize(ds, Metric::Rsrp, size).total_count() == non_null, "voxel counts do not partition");
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1e", worst);
  c.note = "50 random datasets; max |sum - 1| = " + std::string(buf);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"handover classification table", classification_table},
      {"detection matches ground truth and brute-force scan", detection_oracle},
      {"delivery rate arithmetic", delivery_arithmetic},
      {"MAE/RMSE definition and RMSE >= MAE", error_metrics},
      {"empirical CDF properties and satellite RTT Q95", cdf_properties},
      {"altitude trend of RSRP and SINR", altitude_trend},
      {"LOAO leakage and extrapolation penalty", loao_protocol},
      {"probe loopback, drop shim and wire format", probe_integration},
      {"determinism of synth, models and CLI", determinism},
      {"dominance and voxel partitions", partitions},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s [%zu] %s (%s; %.1fs)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), c.note.c_str(),
                secs);
    for (std::size_t k = 0; k < c.failures.size() && k < 5; ++k) std::printf("       %s\n", c.failures[k].c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
