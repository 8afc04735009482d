#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "uavnet/ingest.hpp"
#include "uavnet/telemetry.hpp"

namespace uavnet {

// Empirical distribution over the finite values of a sample.
class EmpiricalCdf {
 public:
  // Nulls and non-finite values are dropped. Throws when nothing remains.
  explicit EmpiricalCdf(std::span<const std::optional<double>> values);
  explicit EmpiricalCdf(std::span<const double> values);

  // Fraction of values <= x.
  double eval(double x) const;
  // Smallest observed v with eval(v) >= p, for p in [0, 1].
  double quantile(double p) const;

  std::size_t size() const { return sorted_.size(); }
  double min() const { return sorted_.front(); }
  double max() const { return sorted_.back(); }
  const std::vector<double>& sorted_values() const { return sorted_; }

 private:
  void finish();
  std::vector<double> sorted_;
};

struct QualityThresholds {
  double rsrp_poor = -100.0;
  double rsrq_poor = -20.0;
  double rssi_poor = -95.0;
  double sinr_poor = 0.0;

  double for_metric(Metric m) const;
};

struct ThresholdFraction {
  Metric metric = Metric::Rsrp;
  double threshold = 0.0;
  std::size_t below = 0;
  std::size_t total = 0;
  // below / total over non-null values; nullopt when total == 0.
  std::optional<double> fraction;
};

// Fraction of serving-cell values strictly below each poor threshold.
std::vector<ThresholdFraction> threshold_report(const FlightDataset& ds,
                                                const QualityThresholds& th = {});

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // population (divide by n)
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Nulls skipped. nullopt when no value remains.
std::optional<SummaryStats> summarize(std::span<const std::optional<double>> values);

struct ProfileRow {
  AltitudeBin bin;
  SummaryStats stats;
};

// Per-bin statistics over non-null metric values; bins without values are omitted.
std::vector<ProfileRow> altitude_profile(const AltitudeBins& binned, Metric metric);

struct CellShare {
  CellId cell_id = 0;
  std::size_t samples = 0;
  double share = 0.0;
};

// Normalized serving-sample share per cell, largest first (ties by cell id).
// Throws when no sample has a serving cell id.
std::vector<CellShare> dominance(const FlightDataset& ds);

struct VoxelSize {
  double dx = 50.0;
  double dy = 50.0;
  double dz = 10.0;
};

struct VoxelKey {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;
  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelGrid {
  Metric metric = Metric::Rsrp;
  ProjectionOrigin projection;
  // Local-frame corner of voxel (0, 0, *). x/y are anchored at the minimum
  // projected coordinate; z at multiples of dz in altitude ASL.
  double origin_x = 0.0;
  double origin_y = 0.0;
  VoxelSize size;
  std::map<VoxelKey, SummaryStats> cells;

  std::size_t total_count() const;
  // Voxel centre in local meters.
  LocalPoint centre(const VoxelKey& key) const;
};

VoxelGrid voxelize(const FlightDataset& ds, Metric metric, const VoxelSize& size = {});

// 100 * delivered / sent rounded to 2 decimals. Throws when sent <= 0,
// delivered < 0 or delivered > sent.
double delivery_rate(std::int64_t pkts_sent, std::int64_t pkts_delivered);

struct DeliveryTotals {
  std::int64_t sent = 0;
  std::int64_t delivered = 0;
};

DeliveryTotals delivery_totals(const FlightDataset& ds);

// Pairs with a null on either side are dropped. Throws with fewer than two
// pairs or zero variance on either side.
double pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y);
double pearson(std::span<const double> x, std::span<const double> y);

struct CdfBand {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> lower;  // mean - std, clipped to [0, 1]
  std::vector<double> upper;  // mean + std, clipped to [0, 1]
};

inline constexpr std::size_t kDefaultBandPoints = 200;

// Evenly spaced grid over the pooled [min, max] of all CDFs.
std::vector<double> pooled_grid(std::span<const EmpiricalCdf> cdfs,
                                std::size_t points = kDefaultBandPoints);

// Mean and population standard deviation of F across CDFs at each grid point.
CdfBand mean_cdf_band(std::span<const EmpiricalCdf> cdfs, std::span<const double> grid);

}  // namespace uavnet
