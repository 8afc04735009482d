#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/fixtures.hpp"
#include "uavnet/stats.hpp"
#include "uavnet/synth.hpp"

using namespace uavnet;
using namespace uavnet::testing;

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(std::round(rng.normal(-95.0, 8.0) * 2.0) / 2.0);
  return v;
}

FlightDataset rsrp_dataset(const std::vector<double>& rsrp) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < rsrp.size(); ++i) s.push_back(cell_sample(static_cast<double>(i), 1, rsrp[i]));
  return dataset_of(s);
}

}  // namespace

TEST_CASE("cdf of three values") {
  const std::vector<double> v = {-105, -95, -85};
  const EmpiricalCdf f(v);
  CHECK(f.eval(-100) == doctest::Approx(1.0 / 3.0));
  CHECK(f.eval(-110) == 0.0);
  CHECK(f.eval(-85) == 1.0);
  CHECK(f.quantile(0.0) == -105);
  CHECK(f.quantile(1.0) == -85);
  CHECK(f.quantile(0.5) == -95);
  CHECK(f.quantile(1.0 / 3.0) == -105);
}

TEST_CASE("cdf drops nulls and non-finite values and rejects empty input") {
  const std::vector<std::optional<double>> v = {std::nullopt, 1.0, std::numeric_limits<double>::quiet_NaN(), 3.0};
  const EmpiricalCdf f(v);
  CHECK(f.size() == 2);
  CHECK_THROWS(EmpiricalCdf(std::vector<double>{}));
  CHECK_THROWS(EmpiricalCdf(std::vector<std::optional<double>>{std::nullopt}));
  CHECK_THROWS(f.quantile(1.5));
}

TEST_CASE("cdf properties on random samples") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = random_values(rng, 1 + rng.below(300));
    const EmpiricalCdf f(v);
    double prev = 0.0;
    for (double x = -140; x <= -50; x += 0.25) {
      const double y = f.eval(x);
      CHECK(y >= prev);
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
      prev = y;
    }
    CHECK(f.eval(f.max()) == 1.0);
    CHECK(f.eval(std::nextafter(f.min(), -1e9)) == 0.0);
    for (double p = 0.0; p <= 1.0; p += 0.05) {
      const double q = f.quantile(p);
      // quantile is the generalized inverse of the cdf
      CHECK(f.eval(q) >= p - 1e-12);
      CHECK(std::find(v.begin(), v.end(), q) != v.end());
    }
  }
}

TEST_CASE("threshold report examples") {
  std::vector<Sample> s;
  for (int i = 0; i < 10; ++i) {
    auto x = cell_sample(i, 1, i < 5 ? -105.0 : -95.0, -15.0);
    x.serving->sinr = -1.0;
    s.push_back(x);
  }
  const auto r = threshold_report(dataset_of(s));
  for (const auto& t : r) {
    if (t.metric == Metric::Rsrp) CHECK(*t.fraction == 0.5);
    if (t.metric == Metric::Rsrq) CHECK(*t.fraction == 0.0);
    if (t.metric == Metric::Sinr) CHECK(*t.fraction == 1.0);
    if (t.metric == Metric::Rssi) CHECK_FALSE(t.fraction.has_value());
  }
}

TEST_CASE("threshold is strictly below") {
  const auto r = threshold_report(rsrp_dataset({-100.0, -100.1}));
  CHECK(r.front().metric == Metric::Rsrp);
  CHECK(r.front().below == 1);
  CHECK(r.front().total == 2);
}

TEST_CASE("profile of a bin with -90 and -100") {
  const auto ds = rsrp_dataset({-90.0, -100.0});
  const auto rows = altitude_profile(bin_by_altitude(ds), Metric::Rsrp);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].stats.mean == -95.0);
  CHECK(rows[0].stats.median == -95.0);
  CHECK(rows[0].stats.std == 5.0);
  CHECK(rows[0].stats.count == 2);
}

TEST_CASE("single-sample bin has std 0") {
  const auto rows = altitude_profile(bin_by_altitude(rsrp_dataset({-77.0})), Metric::Rsrp);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].stats.std == 0.0);
  CHECK(rows[0].stats.min == -77.0);
  CHECK(rows[0].stats.max == -77.0);
}

TEST_CASE("summary matches direct evaluation") {
  Rng rng(12);
  const auto v = random_values(rng, 101);
  std::vector<std::optional<double>> opt(v.begin(), v.end());
  opt.push_back(std::nullopt);
  const auto s = summarize(opt);
  REQUIRE(s);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= 101.0;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(s->mean == doctest::Approx(mean));
  CHECK(s->std == doctest::Approx(std::sqrt(var / 101.0)));
  CHECK(s->median == sorted[50]);
  CHECK(s->count == 101);
  CHECK_FALSE(summarize(std::vector<std::optional<double>>{std::nullopt}).has_value());
}

TEST_CASE("climb with no shadowing gives a non-decreasing rsrp profile") {
  auto sc = climb_scenario(1);
  sc.propagation.shadow_sigma_db = 0.0;
  const auto r = generate(sc);
  const auto rows = altitude_profile(bin_by_altitude(r.dataset), Metric::Rsrp);
  REQUIRE(rows.size() == 16);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].stats.mean >= rows[i - 1].stats.mean);
}

TEST_CASE("dominance shares") {
  const auto d = dominance(cell_trace({8, 8, 8, 1}));
  REQUIRE(d.size() == 2);
  CHECK(d[0].cell_id == 8);
  CHECK(d[0].share == 0.75);
  CHECK(d[1].cell_id == 1);
  CHECK(d[1].share == 0.25);

  const auto one = dominance(cell_trace({5, 5, std::nullopt}));
  REQUIRE(one.size() == 1);
  CHECK(one[0].share == 1.0);
  CHECK_THROWS(dominance(cell_trace({std::nullopt})));
}

TEST_CASE("dominance shares sum to one") {
  Rng rng(21);
  std::vector<std::optional<CellId>> cells;
  for (int i = 0; i < 997; ++i) cells.push_back(static_cast<CellId>(rng.below(17)));
  double sum = 0.0;
  for (const auto& c : dominance(cell_trace(cells))) sum += c.share;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("voxels: 1 m apart share a voxel, 60 m apart do not") {
  // 0.00001 deg of latitude is about 1.1 m
  std::vector<Sample> s = {cell_sample(0, 1, -90.0), cell_sample(1, 1, -100.0)};
  s[1].position.latitude += 0.00001;
  const auto g = voxelize(dataset_of(s), Metric::Rsrp);
  REQUIRE(g.cells.size() == 1);
  CHECK(g.cells.begin()->second.mean == -95.0);
  CHECK(g.cells.begin()->second.count == 2);

  std::vector<Sample> far = {cell_sample(0, 1, -90.0), cell_sample(1, 1, -100.0)};
  // 60 m east at 49 deg latitude
  far[1].position.longitude += 60.0 / (6371000.0 * std::cos(49.0 * M_PI / 180.0) * M_PI / 180.0);
  const auto h = voxelize(dataset_of(far), Metric::Rsrp);
  CHECK(h.cells.size() == 2);
}

TEST_CASE("voxel counts partition the non-null values") {
  Rng rng(6);
  std::vector<Sample> s;
  for (int i = 0; i < 400; ++i) {
    auto x = cell_sample(i, 1, rng.bernoulli(0.1) ? std::optional<double>() : rng.uniform(-120, -70));
    x.position = {49.0 + rng.uniform(0, 0.004), 8.0 + rng.uniform(0, 0.004), rng.uniform(240, 400)};
    s.push_back(x);
  }
  const auto ds = dataset_of(s);
  const auto g = voxelize(ds, Metric::Rsrp);
  std::size_t non_null = 0;
  for (const auto& v : metric_series(ds, Metric::Rsrp)) non_null += v ? 1 : 0;
  CHECK(g.total_count() == non_null);
  CHECK_THROWS(voxelize(ds, Metric::Rsrp, VoxelSize{0.0, 50.0, 10.0}));
}

TEST_CASE("delivery rate examples") {
  CHECK(delivery_rate(5159, 5130) == 99.44);
  CHECK(delivery_rate(3627, 3602) == 99.31);
  CHECK(delivery_rate(1234, 1234) == 100.0);
  CHECK_THROWS(delivery_rate(0, 0));
  CHECK_THROWS(delivery_rate(10, 11));
}

TEST_CASE("pearson examples and invariance") {
  std::vector<double> x, y, z;
  for (int i = 0; i < 50; ++i) {
    x.push_back(i);
    y.push_back(2.0 * i + 1.0);
    z.push_back(-i);
  }
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));

  Rng rng(30);
  std::vector<double> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(rng.normal(0, 1));
    b.push_back(0.5 * a.back() + rng.normal(0, 1));
  }
  const double r = pearson(a, b);
  for (double scale : {3.0, -0.25}) {
    std::vector<double> t;
    for (double v : a) t.push_back(scale * v + 7.0);
    CHECK(pearson(t, b) == doctest::Approx((scale > 0 ? 1 : -1) * r));
  }
  CHECK_THROWS(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}));
  CHECK_THROWS(pearson(std::vector<double>{1.0, 1.0, 1.0}, std::vector<double>{1.0, 2.0, 3.0}));
}

TEST_CASE("pearson drops pairs with a null side") {
  const std::vector<std::optional<double>> x = {1.0, 2.0, std::nullopt, 3.0};
  const std::vector<std::optional<double>> y = {2.0, 4.0, 100.0, 6.0};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
}

TEST_CASE("identical cdfs give a zero-width band") {
  Rng rng(2);
  const auto v = random_values(rng, 100);
  const std::vector<EmpiricalCdf> cdfs = {EmpiricalCdf(v), EmpiricalCdf(v), EmpiricalCdf(v)};
  const auto grid = pooled_grid(cdfs);
  CHECK(grid.size() == kDefaultBandPoints);
  const auto band = mean_cdf_band(cdfs, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(band.std[i] == 0.0);
    CHECK(band.lower[i] == band.upper[i]);
    CHECK(band.mean[i] == cdfs[0].eval(grid[i]));
  }
}

TEST_CASE("constants 0 and 1 at grid point 0.5 give mean 0.5 and std 0.5") {
  const std::vector<EmpiricalCdf> cdfs = {EmpiricalCdf(std::vector<double>{0.0}),
                                          EmpiricalCdf(std::vector<double>{1.0})};
  const std::vector<double> grid = {0.5};
  const auto band = mean_cdf_band(cdfs, grid);
  CHECK(band.mean[0] == 0.5);
  CHECK(band.std[0] == 0.5);
  CHECK(band.lower[0] == 0.0);
  CHECK(band.upper[0] == 1.0);
}

TEST_CASE("band mean is monotone and the band contains it") {
  Rng rng(17);
  std::vector<EmpiricalCdf> cdfs;
  for (int i = 0; i < 8; ++i) cdfs.emplace_back(random_values(rng, 50 + rng.below(100)));
  const auto grid = pooled_grid(cdfs, 300);
  const auto band = mean_cdf_band(cdfs, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) CHECK(band.mean[i] >= band.mean[i - 1]);
    CHECK(band.lower[i] <= band.mean[i]);
    CHECK(band.upper[i] >= band.mean[i]);
    CHECK(band.lower[i] >= 0.0);
    CHECK(band.upper[i] <= 1.0);
  }
  CHECK(band.mean.back() == 1.0);
}
