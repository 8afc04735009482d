#include "uavnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavnet {

EmpiricalCdf::EmpiricalCdf(std::span<const std::optional<double>> values) {
  for (const auto& v : values) {
    if (v && std::isfinite(*v)) sorted_.push_back(*v);
  }
  finish();
}

EmpiricalCdf::EmpiricalCdf(std::span<const double> values) {
  for (double v : values) {
    if (std::isfinite(v)) sorted_.push_back(v);
  }
  finish();
}

void EmpiricalCdf::finish() {
  if (sorted_.empty()) throw std::invalid_argument("cdf: no finite values");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::eval(double x) const {
  const auto le = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(le) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
  const std::size_t n = sorted_.size();
  const auto frac = [n](std::size_t k) { return static_cast<double>(k) / static_cast<double>(n); };
  // Smallest k (count of values) with k/n >= p, evaluated with the same
  // division eval() uses so the two stay consistent.
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k > 1 && frac(k - 1) >= p) --k;
  while (k < n && frac(k) < p) ++k;
  // Ties: eval() counts every copy, so any position within a run of equal
  // values maps to the same observed value.
  return sorted_[k - 1];
}

double QualityThresholds::for_metric(Metric m) const {
  switch (m) {
    case Metric::Rsrp: return rsrp_poor;
    case Metric::Rsrq: return rsrq_poor;
    case Metric::Rssi: return rssi_poor;
    case Metric::Sinr: return sinr_poor;
    default: throw std::invalid_argument("no quality threshold for metric");
  }
}

std::vector<ThresholdFraction> threshold_report(const FlightDataset& ds,
                                                const QualityThresholds& th) {
  std::vector<ThresholdFraction> out;
  for (Metric m : kRadioMetrics) {
    ThresholdFraction f;
    f.metric = m;
    f.threshold = th.for_metric(m);
    for (const auto& s : ds.samples) {
      auto v = metric_value(s, m);
      if (!v) continue;
      ++f.total;
      if (*v < f.threshold) ++f.below;
    }
    if (f.total > 0) f.fraction = static_cast<double>(f.below) / static_cast<double>(f.total);
    out.push_back(f);
  }
  return out;
}

std::optional<SummaryStats> summarize(std::span<const std::optional<double>> values) {
  std::vector<double> v;
  for (const auto& x : values) {
    if (x && std::isfinite(*x)) v.push_back(*x);
  }
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  SummaryStats s;
  s.count = v.size();
  s.min = v.front();
  s.max = v.back();
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  // Sorted summation can drift outside [min, max] by an ulp.
  s.mean = std::clamp(s.mean, s.min, s.max);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  const std::size_t n = v.size();
  s.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return s;
}

std::vector<ProfileRow> altitude_profile(const AltitudeBins& binned, Metric metric) {
  std::vector<ProfileRow> out;
  for (const auto& [bin, samples] : binned) {
    std::vector<std::optional<double>> values;
    values.reserve(samples.size());
    for (const auto& s : samples) values.push_back(metric_value(s, metric));
    if (auto st = summarize(values)) out.push_back({bin, *st});
  }
  return out;
}

std::vector<CellShare> dominance(const FlightDataset& ds) {
  std::map<CellId, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : ds.samples) {
    if (auto id = serving_cell(s)) {
      ++counts[*id];
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("dominance: no serving cell ids");
  std::vector<CellShare> out;
  for (const auto& [id, n] : counts) {
    out.push_back({id, n, static_cast<double>(n) / static_cast<double>(total)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CellShare& a, const CellShare& b) { return a.samples > b.samples; });
  return out;
}

std::size_t VoxelGrid::total_count() const {
  std::size_t n = 0;
  for (const auto& [key, st] : cells) n += st.count;
  return n;
}

LocalPoint VoxelGrid::centre(const VoxelKey& key) const {
  return {origin_x + (static_cast<double>(key.i) + 0.5) * size.dx,
          origin_y + (static_cast<double>(key.j) + 0.5) * size.dy,
          (static_cast<double>(key.k) + 0.5) * size.dz};
}

VoxelGrid voxelize(const FlightDataset& ds, Metric metric, const VoxelSize& size) {
  if (!(size.dx > 0.0 && size.dy > 0.0 && size.dz > 0.0)) {
    throw std::invalid_argument("voxel size must be positive");
  }
  VoxelGrid grid;
  grid.metric = metric;
  grid.size = size;
  if (ds.samples.empty()) return grid;
  grid.projection = centroid(ds);
  const auto pts = local_projection(ds, grid.projection);
  grid.origin_x = pts.front().x_m;
  grid.origin_y = pts.front().y_m;
  for (const auto& p : pts) {
    grid.origin_x = std::min(grid.origin_x, p.x_m);
    grid.origin_y = std::min(grid.origin_y, p.y_m);
  }

  std::map<VoxelKey, std::vector<std::optional<double>>> members;
  for (std::size_t n = 0; n < ds.samples.size(); ++n) {
    auto v = metric_value(ds.samples[n], metric);
    if (!v || !std::isfinite(pts[n].alt_m)) continue;
    VoxelKey key{static_cast<std::int64_t>(std::floor((pts[n].x_m - grid.origin_x) / size.dx)),
                 static_cast<std::int64_t>(std::floor((pts[n].y_m - grid.origin_y) / size.dy)),
                 static_cast<std::int64_t>(std::floor(pts[n].alt_m / size.dz))};
    members[key].push_back(v);
  }
  for (const auto& [key, values] : members) grid.cells.emplace(key, *summarize(values));
  return grid;
}

double delivery_rate(std::int64_t pkts_sent, std::int64_t pkts_delivered) {
  if (pkts_sent <= 0) throw std::invalid_argument("delivery_rate: pkts_sent must be positive");
  if (pkts_delivered < 0 || pkts_delivered > pkts_sent) {
    throw std::invalid_argument("delivery_rate: delivered must be within [0, sent]");
  }
  const double pct = 100.0 * static_cast<double>(pkts_delivered) / static_cast<double>(pkts_sent);
  return std::round(pct * 100.0) / 100.0;
}

DeliveryTotals delivery_totals(const FlightDataset& ds) {
  DeliveryTotals t;
  for (const auto& s : ds.samples) {
    if (!s.e2e || !s.e2e->pkts_sent) continue;
    t.sent += *s.e2e->pkts_sent;
    t.delivered += s.e2e->pkts_delivered.value_or(0);
  }
  return t;
}

namespace {

double pearson_dense(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least two pairs");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && y[i] && std::isfinite(*x[i]) && std::isfinite(*y[i])) {
      a.push_back(*x[i]);
      b.push_back(*y[i]);
    }
  }
  return pearson_dense(a, b);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  return pearson_dense({x.begin(), x.end()}, {y.begin(), y.end()});
}

std::vector<double> pooled_grid(std::span<const EmpiricalCdf> cdfs, std::size_t points) {
  if (cdfs.empty()) throw std::invalid_argument("pooled_grid: no cdfs");
  if (points < 2) throw std::invalid_argument("pooled_grid: need at least two points");
  double lo = cdfs.front().min();
  double hi = cdfs.front().max();
  for (const auto& c : cdfs) {
    lo = std::min(lo, c.min());
    hi = std::max(hi, c.max());
  }
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  grid.back() = hi;
  return grid;
}

CdfBand mean_cdf_band(std::span<const EmpiricalCdf> cdfs, std::span<const double> grid) {
  if (cdfs.size() < 2) throw std::invalid_argument("mean_cdf_band: need at least two cdfs");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("mean_cdf_band: grid must be sorted");
  }
  CdfBand band;
  band.grid.assign(grid.begin(), grid.end());
  const auto n = static_cast<double>(cdfs.size());
  std::vector<double> f(cdfs.size());
  for (double g : grid) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cdfs.size(); ++c) {
      f[c] = cdfs[c].eval(g);
      sum += f[c];
    }
    const bool all_equal = std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); });
    const double mean = all_equal ? f.front() : sum / n;
    double ss = 0.0;
    for (double v : f) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    band.mean.push_back(mean);
    band.std.push_back(sd);
    band.lower.push_back(std::max(0.0, mean - sd));
    band.upper.push_back(std::min(1.0, mean + sd));
  }
  return band;
}

}  // namespace uavnet
