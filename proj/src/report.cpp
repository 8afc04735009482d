#include "uavnet/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "uavnet/ingest.hpp"

namespace uavnet::report {

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string text_of(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return std::isfinite(v) ? format_double(v) : std::string(); }
    std::string operator()(const std::string& v) const { return v; }
  } visitor;
  return std::visit(visitor, c);
}

nlohmann::json json_of(const Cell& c) {
  struct {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(std::int64_t v) const { return v; }
    nlohmann::json operator()(double v) const {
      return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    }
    nlohmann::json operator()(const std::string& v) const { return v; }
  } visitor;
  return std::visit(visitor, c);
}

Cell str(std::string_view s) { return std::string(s); }
Cell num(std::size_t v) { return static_cast<std::int64_t>(v); }

std::optional<EmpiricalCdf> cdf_of(const std::vector<std::optional<double>>& series) {
  const bool any = std::any_of(series.begin(), series.end(),
                               [](const auto& v) { return v && std::isfinite(*v); });
  if (!any) return std::nullopt;
  return EmpiricalCdf(series);
}

void add_steps(Table& t, const std::vector<Cell>& prefix, const EmpiricalCdf& cdf) {
  const auto& v = cdf.sorted_values();
  const auto n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    auto row = prefix;
    row.push_back(v[i]);
    row.push_back(static_cast<double>(i + 1) / n);
    t.add(std::move(row));
  }
}

}  // namespace

Cell cell(std::optional<double> v) { return v ? Cell(*v) : Cell(); }
Cell cell(std::optional<std::int64_t> v) { return v ? Cell(*v) : Cell(); }

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row width does not match header");
  rows.push_back(std::move(row));
}

void write_table(std::ostream& os, const Table& t, TableFormat format) {
  if (format == TableFormat::Csv) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << csv_escape(t.columns[c]);
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_escape(text_of(row[c]));
      os << '\n';
    }
    return;
  }
  for (const auto& row : t.rows) {
    nlohmann::ordered_json j;
    for (std::size_t c = 0; c < row.size(); ++c) j[t.columns[c]] = json_of(row[c]);
    os << j.dump() << '\n';
  }
}

void write_table_file(const std::string& path, const Table& t, TableFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_table(out, t, format);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

Table events_table(const std::vector<HandoverEvent>& events) {
  Table t{{"t_ns", "sample_index", "from_cell", "to_cell", "cause", "pre_rsrp", "pre_rsrq",
           "pre_nb_rsrp", "rtt_delta_ms"},
          {}};
  for (const auto& e : events) {
    t.add({Cell(e.t), num(e.sample_index), Cell(e.from_cell), Cell(e.to_cell), str(to_string(e.cause)),
           cell(e.pre_rsrp), cell(e.pre_rsrq), cell(e.pre_nb_rsrp), cell(e.rtt_delta_ms)});
  }
  return t;
}

Table rate_table(const std::vector<RateBin>& bins, double bin_minutes) {
  Table t{{"bin_start_ns", "bin_minutes", "e1", "e2", "e3", "e4", "total", "per_min"}, {}};
  for (const auto& b : bins) {
    t.add({Cell(b.bin_start), bin_minutes, num(b.per_cause[0]), num(b.per_cause[1]),
           num(b.per_cause[2]), num(b.per_cause[3]), num(b.total),
           static_cast<double>(b.total) / bin_minutes});
  }
  return t;
}

Table impact_table(const RttImpact& impact) {
  Table t{{"t_ns", "from_cell", "to_cell", "cause", "rtt_delta_ms", "effect"}, {}};
  for (const auto& e : impact.events) {
    std::string effect = "missing";
    if (e.rtt_delta_ms) effect = *e.rtt_delta_ms > 0 ? "degrade" : *e.rtt_delta_ms < 0 ? "improve" : "unchanged";
    t.add({Cell(e.t), Cell(e.from_cell), Cell(e.to_cell), str(to_string(e.cause)),
           cell(e.rtt_delta_ms), effect});
  }
  return t;
}

Table visibility_table(const std::vector<PhaseVisibility>& rows) {
  Table t{{"phase", "unique_cells", "handovers", "handovers_per_min"}, {}};
  for (const auto& r : rows) {
    t.add({r.name, num(r.unique_cells), num(r.handovers), r.handovers_per_min});
  }
  return t;
}

Table cdf_table(const FlightDataset& ds, const std::vector<Metric>& metrics) {
  Table t{{"metric", "unit", "value", "cdf"}, {}};
  for (auto m : metrics) {
    if (const auto cdf = cdf_of(metric_series(ds, m))) add_steps(t, {str(to_string(m)), str(unit_of(m))}, *cdf);
  }
  return t;
}

Table threshold_table(const std::vector<ThresholdFraction>& rows) {
  Table t{{"metric", "threshold", "below", "total", "fraction"}, {}};
  for (const auto& r : rows) {
    t.add({str(to_string(r.metric)), r.threshold, num(r.below), num(r.total), cell(r.fraction)});
  }
  return t;
}

Table profile_table(const FlightDataset& ds, const std::vector<Metric>& metrics,
                    const BinningOptions& binning) {
  Table t{{"metric", "reference", "bin_lo_m", "bin_hi_m", "count", "mean", "std", "median", "min", "max"},
          {}};
  const auto bins = bin_by_altitude(ds, binning);
  const std::string ref = binning.reference == AltitudeReference::Asl ? "asl" : "agl";
  for (auto m : metrics) {
    for (const auto& r : altitude_profile(bins, m)) {
      t.add({str(to_string(m)), ref, r.bin.lo_m(), r.bin.hi_m(), num(r.stats.count), r.stats.mean,
             r.stats.std, r.stats.median, r.stats.min, r.stats.max});
    }
  }
  return t;
}

Table dominance_table(const std::vector<CellShare>& shares) {
  Table t{{"cell_id", "samples", "share"}, {}};
  for (const auto& s : shares) t.add({Cell(s.cell_id), num(s.samples), s.share});
  return t;
}

Table grid_table(const VoxelGrid& grid) {
  Table t{{"metric", "i", "j", "k", "x_m", "y_m", "alt_m", "count", "mean", "std", "median", "min", "max"},
          {}};
  for (const auto& [key, s] : grid.cells) {
    const auto c = grid.centre(key);
    t.add({str(to_string(grid.metric)), Cell(key.i), Cell(key.j), Cell(key.k), c.x_m, c.y_m, c.alt_m,
           num(s.count), s.mean, s.std, s.median, s.min, s.max});
  }
  return t;
}

Table band_table(const CdfBand& band, Metric metric) {
  Table t{{"metric", "value", "mean", "std", "lower", "upper"}, {}};
  for (std::size_t i = 0; i < band.grid.size(); ++i) {
    t.add({str(to_string(metric)), band.grid[i], band.mean[i], band.std[i], band.lower[i], band.upper[i]});
  }
  return t;
}

std::string grid_svg(const VoxelGrid& grid) {
  struct Acc {
    double weighted = 0.0;
    std::size_t count = 0;
  };
  std::map<std::pair<std::int64_t, std::int64_t>, Acc> columns;
  for (const auto& [key, s] : grid.cells) {
    auto& a = columns[{key.i, key.j}];
    a.weighted += s.mean * static_cast<double>(s.count);
    a.count += s.count;
  }
  std::ostringstream os;
  if (columns.empty()) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"200\" height=\"40\">"
          "<text x=\"10\" y=\"25\">no data</text></svg>\n";
    return os.str();
  }
  std::int64_t i0 = columns.begin()->first.first, i1 = i0, j0 = columns.begin()->first.second, j1 = j0;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [ij, a] : columns) {
    i0 = std::min(i0, ij.first);
    i1 = std::max(i1, ij.first);
    j0 = std::min(j0, ij.second);
    j1 = std::max(j1, ij.second);
    const double m = a.weighted / static_cast<double>(a.count);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  const auto nx = i1 - i0 + 1;
  const auto ny = j1 - j0 + 1;
  const std::int64_t px = std::clamp<std::int64_t>(600 / std::max(nx, ny), 4, 40);
  const std::int64_t margin = 20;
  const std::int64_t legend = 40;
  const std::int64_t width = nx * px + 2 * margin;
  const std::int64_t height = ny * px + 2 * margin + legend;

  // viridis stops
  static constexpr std::array<std::array<int, 3>, 5> kStops{
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  auto colour = [&](double v) {
    const double f = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    const double pos = std::clamp(f, 0.0, 1.0) * (kStops.size() - 1);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(pos), kStops.size() - 2);
    const double w = pos - static_cast<double>(k);
    char buf[8];
    std::array<int, 3> rgb{};
    for (int c = 0; c < 3; ++c) {
      rgb[c] = static_cast<int>(std::lround(kStops[k][c] * (1.0 - w) + kStops[k + 1][c] * w));
    }
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return std::string(buf);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& [ij, a] : columns) {
    const double m = a.weighted / static_cast<double>(a.count);
    // north up: larger j at the top
    const auto x = margin + (ij.first - i0) * px;
    const auto y = margin + (j1 - ij.second) * px;
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << px << "\" height=\"" << px
       << "\" fill=\"" << colour(m) << "\"><title>" << format_double(m) << "</title></rect>\n";
  }
  const auto ly = margin + ny * px + 15;
  char lo_txt[32], hi_txt[32];
  std::snprintf(lo_txt, sizeof(lo_txt), "%.1f", lo);
  std::snprintf(hi_txt, sizeof(hi_txt), "%.1f", hi);
  os << "<text x=\"" << margin << "\" y=\"" << ly + 12 << "\">" << to_string(grid.metric) << " ["
     << unit_of(grid.metric) << "] " << lo_txt << " .. " << hi_txt << "</text>\n";
  for (int s = 0; s < 20; ++s) {
    os << "<rect x=\"" << width - margin - 200 + s * 10 << "\" y=\"" << ly << "\" width=\"10\" height=\"14\" fill=\""
       << colour(lo + (hi - lo) * (s + 0.5) / 20.0) << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------

LinkSummary summarize_link(const FlightDataset& ds, std::string label) {
  LinkSummary s;
  s.label = std::move(label);
  if (!ds.samples.empty()) s.link = ds.samples.front().link;
  const auto rtt = metric_series(ds, Metric::Rtt);
  const auto dl = metric_series(ds, Metric::Downlink);
  const auto ul = metric_series(ds, Metric::Uplink);
  const auto totals = delivery_totals(ds);
  const auto rtt_cdf = cdf_of(rtt);
  const auto dl_cdf = cdf_of(dl);
  const auto ul_cdf = cdf_of(ul);
  if (!rtt_cdf && !dl_cdf && !ul_cdf && totals.sent == 0) {
    throw std::invalid_argument("compare: '" + s.label + "' has no end-to-end data");
  }
  if (rtt_cdf) {
    s.rtt_count = rtt_cdf->size();
    s.rtt_f50 = rtt_cdf->eval(50.0);
    s.rtt_f150 = rtt_cdf->eval(150.0);
    s.rtt_median = summarize(rtt)->median;
  }
  if (dl_cdf) {
    s.dl_q05 = dl_cdf->quantile(0.05);
    s.dl_median = summarize(dl)->median;
  }
  if (ul_cdf) {
    s.ul_q05 = ul_cdf->quantile(0.05);
    s.ul_median = summarize(ul)->median;
  }
  s.pkts_sent = totals.sent;
  s.pkts_delivered = totals.delivered;
  if (totals.sent > 0) s.delivery_pct = delivery_rate(totals.sent, totals.delivered);
  return s;
}

Comparison compare(const FlightDataset& cellular, const FlightDataset& satellite) {
  return {{summarize_link(cellular, "cellular"), summarize_link(satellite, "satellite")}};
}

Table compare_table(const Comparison& c) {
  Table t{{"link", "rtt_count", "rtt_f50", "rtt_f150", "rtt_median_ms", "dl_q05_mbps", "dl_median_mbps",
           "ul_q05_mbps", "ul_median_mbps", "pkts_sent", "pkts_delivered", "delivery_pct"},
          {}};
  for (const auto& l : c.links) {
    t.add({l.label, num(l.rtt_count), cell(l.rtt_f50), cell(l.rtt_f150), cell(l.rtt_median), cell(l.dl_q05),
           cell(l.dl_median), cell(l.ul_q05), cell(l.ul_median), Cell(l.pkts_sent), Cell(l.pkts_delivered),
           cell(l.delivery_pct)});
  }
  return t;
}

Table compare_cdf_table(const std::vector<std::pair<std::string, const FlightDataset*>>& inputs) {
  Table t{{"link", "metric", "unit", "value", "cdf"}, {}};
  for (const auto& [label, ds] : inputs) {
    for (auto m : {Metric::Rtt, Metric::Downlink, Metric::Uplink}) {
      if (const auto cdf = cdf_of(metric_series(*ds, m))) {
        add_steps(t, {label, str(to_string(m)), str(unit_of(m))}, *cdf);
      }
    }
  }
  return t;
}

Table eval_table(const std::vector<predict::EvalReport>& reports) {
  Table t{{"protocol", "model", "metric", "unit", "fold", "n_train", "n_test", "mae", "rmse"}, {}};
  for (const auto& r : reports) {
    const auto proto = str(predict::to_string(r.protocol));
    const auto model = str(predict::to_string(r.kind));
    const auto metric = str(to_string(r.target));
    const auto unit = str(unit_of(r.target));
    for (const auto& f : r.folds) {
      t.add({proto, model, metric, unit, f.label, num(f.train_index.size()), num(f.test_index.size()),
             f.error.mae, f.error.rmse});
    }
    t.add({proto, model, metric, unit, str("pooled"), Cell(), num(r.n_test), r.pooled.mae, r.pooled.rmse});
  }
  return t;
}

}  // namespace uavnet::report
