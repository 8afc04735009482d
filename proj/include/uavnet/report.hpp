#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "uavnet/dataset_io.hpp"
#include "uavnet/handover.hpp"
#include "uavnet/predict.hpp"
#include "uavnet/stats.hpp"

namespace uavnet::report {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

Cell cell(std::optional<double> v);
Cell cell(std::optional<std::int64_t> v);

// Column-oriented result table; CSV renders monostate as an empty field,
// JSONL as null.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

void write_table(std::ostream& os, const Table& t, TableFormat format);
void write_table_file(const std::string& path, const Table& t, TableFormat format);

// --- handover --------------------------------------------------------------

Table events_table(const std::vector<HandoverEvent>& events);
Table rate_table(const std::vector<RateBin>& bins, double bin_minutes);
Table impact_table(const RttImpact& impact);
Table visibility_table(const std::vector<PhaseVisibility>& rows);

// --- stats -----------------------------------------------------------------

// Step points (value, F(value)) per metric with data.
Table cdf_table(const FlightDataset& ds, const std::vector<Metric>& metrics);
Table threshold_table(const std::vector<ThresholdFraction>& rows);
Table profile_table(const FlightDataset& ds, const std::vector<Metric>& metrics,
                    const BinningOptions& binning = {});
Table dominance_table(const std::vector<CellShare>& shares);
Table grid_table(const VoxelGrid& grid);
Table band_table(const CdfBand& band, Metric metric);

// Plan-view heat map of a voxel grid (count-weighted mean over altitude).
std::string grid_svg(const VoxelGrid& grid);

// --- compare ---------------------------------------------------------------

struct LinkSummary {
  std::string label;
  LinkType link = LinkType::Cellular;
  std::size_t rtt_count = 0;
  std::optional<double> rtt_f50;   // F(50 ms)
  std::optional<double> rtt_f150;  // F(150 ms)
  std::optional<double> rtt_median;
  std::optional<double> dl_q05;  // 95% of DL samples exceed this
  std::optional<double> ul_q05;
  std::optional<double> dl_median;
  std::optional<double> ul_median;
  std::int64_t pkts_sent = 0;
  std::int64_t pkts_delivered = 0;
  std::optional<double> delivery_pct;
};

// Throws std::invalid_argument when the dataset carries no E2E values.
LinkSummary summarize_link(const FlightDataset& ds, std::string label);

struct Comparison {
  std::vector<LinkSummary> links;
};

Comparison compare(const FlightDataset& cellular, const FlightDataset& satellite);

Table compare_table(const Comparison& c);
// RTT/DL/UL step points for every link.
Table compare_cdf_table(const std::vector<std::pair<std::string, const FlightDataset*>>& inputs);

// --- predict ---------------------------------------------------------------

Table eval_table(const std::vector<predict::EvalReport>& reports);

}  // namespace uavnet::report
