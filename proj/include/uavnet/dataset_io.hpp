#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavnet/telemetry.hpp"

namespace uavnet {

enum class TableFormat { Csv, Jsonl };

std::string_view to_string(TableFormat f);
TableFormat parse_table_format(std::string_view text);

// Column order of the dataset file. Writers emit exactly this order; the CSV
// reader accepts any order as long as the header names the same set.
inline constexpr std::array<std::string_view, 30> kDatasetColumns = {
    "ts_ns",       "lat",         "lon",         "alt_asl_m",  "speed_mps",   "heading_deg",
    "roll_deg",    "pitch_deg",   "link",        "srv_cell_id", "srv_pci",    "srv_tac",
    "srv_rsrp",    "srv_rsrq",    "srv_rssi",    "srv_sinr",    "nb1_cell_id", "nb2_cell_id",
    "nb3_cell_id", "nb1_rsrp",    "nb2_rsrp",    "nb3_rsrp",    "nb1_rsrq",    "nb2_rsrq",
    "nb3_rsrq",    "rtt_ms",      "dl_mbps",     "ul_mbps",     "pkts_sent",   "pkts_delivered"};

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_dataset(std::ostream& os, const FlightDataset& ds, TableFormat format = TableFormat::Csv);
void write_dataset_file(const std::string& path, const FlightDataset& ds,
                        TableFormat format = TableFormat::Csv);

struct LineError {
  std::size_t line = 0;  // 1-based, header counts as line 1
  std::string message;
};

struct ParseReport {
  TableFormat format = TableFormat::Csv;
  std::size_t data_lines = 0;
  std::vector<LineError> rejected;
  // Number of adjacent timestamp inversions found in file order before sorting.
  std::size_t reordered = 0;
};

struct ParsedDataset {
  FlightDataset dataset;
  ParseReport report;
};

inline constexpr double kMaxMalformedFraction = 0.05;

// Empty link fields take `link`; a row naming a different link is rejected.
// Throws std::runtime_error when more than 5% of data lines are malformed or
// when the header is missing/invalid.
ParsedDataset parse_dataset_text(std::string_view text, LinkType link,
                                 std::string flight_id = "flight");

// Flight id defaults to the file stem. Throws std::runtime_error naming the
// path when the file cannot be read.
ParsedDataset parse_dataset(const std::string& path, LinkType link);

}  // namespace uavnet
