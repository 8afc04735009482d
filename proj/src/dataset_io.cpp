#include "uavnet/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace uavnet {

using json = nlohmann::json;

std::string_view to_string(TableFormat f) { return f == TableFormat::Csv ? "csv" : "jsonl"; }

TableFormat parse_table_format(std::string_view text) {
  if (text == "csv") return TableFormat::Csv;
  if (text == "jsonl") return TableFormat::Jsonl;
  throw std::invalid_argument("unknown format '" + std::string(text) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

constexpr std::size_t kColumnCount = kDatasetColumns.size();

enum Col : std::size_t {
  kTs, kLat, kLon, kAlt, kSpeed, kHeading, kRoll, kPitch, kLink,
  kSrvCell, kSrvPci, kSrvTac, kSrvRsrp, kSrvRsrq, kSrvRssi, kSrvSinr,
  kNbCell1, kNbCell2, kNbCell3, kNbRsrp1, kNbRsrp2, kNbRsrp3, kNbRsrq1, kNbRsrq2, kNbRsrq3,
  kRtt, kDl, kUl, kSent, kDelivered
};

// One record as text cells; nullopt = empty field.
using Row = std::array<std::optional<std::string>, kColumnCount>;

template <typename T>
std::optional<std::string> text_of(const std::optional<T>& v) {
  if (!v) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

Row to_row(const Sample& s) {
  Row r;
  r[kTs] = std::to_string(s.timestamp);
  r[kLat] = format_double(s.position.latitude);
  r[kLon] = format_double(s.position.longitude);
  r[kAlt] = format_double(s.position.altitude_asl);
  if (s.flight) {
    r[kSpeed] = format_double(s.flight->speed_mps);
    r[kHeading] = format_double(s.flight->heading_deg);
    r[kRoll] = format_double(s.flight->roll_deg);
    r[kPitch] = format_double(s.flight->pitch_deg);
  }
  r[kLink] = std::string(to_string(s.link));
  if (s.serving) {
    const auto& c = *s.serving;
    r[kSrvCell] = text_of(c.cell_id);
    r[kSrvPci] = text_of(c.pci);
    r[kSrvTac] = text_of(c.tac);
    r[kSrvRsrp] = text_of(c.rsrp);
    r[kSrvRsrq] = text_of(c.rsrq);
    r[kSrvRssi] = text_of(c.rssi);
    r[kSrvSinr] = text_of(c.sinr);
  }
  for (std::size_t k = 0; k < std::min(s.neighbors.size(), kMaxNeighbors); ++k) {
    r[kNbCell1 + k] = text_of(s.neighbors[k].cell_id);
    r[kNbRsrp1 + k] = text_of(s.neighbors[k].rsrp);
    r[kNbRsrq1 + k] = text_of(s.neighbors[k].rsrq);
  }
  if (s.e2e) {
    const auto& e = *s.e2e;
    r[kRtt] = text_of(e.rtt_ms);
    r[kDl] = text_of(e.dl_throughput_mbps);
    r[kUl] = text_of(e.ul_throughput_mbps);
    r[kSent] = text_of(e.pkts_sent);
    r[kDelivered] = text_of(e.pkts_delivered);
  }
  return r;
}

double parse_f64(const std::string& text, std::string_view col) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
    throw std::invalid_argument("column " + std::string(col) + ": not a number '" + text + "'");
  }
  return v;
}

std::int64_t parse_i64(const std::string& text, std::string_view col) {
  std::int64_t v = 0;
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::invalid_argument("column " + std::string(col) + ": not an integer '" + text + "'");
  }
  return v;
}

std::optional<double> opt_f64(const Row& r, std::size_t c) {
  if (!r[c]) return std::nullopt;
  return parse_f64(*r[c], kDatasetColumns[c]);
}

std::optional<std::int64_t> opt_i64(const Row& r, std::size_t c) {
  if (!r[c]) return std::nullopt;
  return parse_i64(*r[c], kDatasetColumns[c]);
}

bool any_present(const Row& r, std::initializer_list<std::size_t> cols) {
  return std::any_of(cols.begin(), cols.end(), [&](std::size_t c) { return r[c].has_value(); });
}

Sample from_row(const Row& r, LinkType link) {
  Sample s;
  if (!r[kTs] || !r[kLat] || !r[kLon] || !r[kAlt]) {
    throw std::invalid_argument("missing required ts_ns/lat/lon/alt_asl_m");
  }
  s.timestamp = parse_i64(*r[kTs], "ts_ns");
  s.position = {parse_f64(*r[kLat], "lat"), parse_f64(*r[kLon], "lon"),
                parse_f64(*r[kAlt], "alt_asl_m")};

  if (any_present(r, {kSpeed, kHeading, kRoll, kPitch})) {
    if (!(r[kSpeed] && r[kHeading] && r[kRoll] && r[kPitch])) {
      throw std::invalid_argument("flight state partially populated");
    }
    s.flight = FlightState{*opt_f64(r, kSpeed), *opt_f64(r, kHeading), *opt_f64(r, kRoll),
                           *opt_f64(r, kPitch)};
  }

  s.link = link;
  if (r[kLink]) {
    const LinkType row_link = parse_link(*r[kLink]);
    if (row_link != link) {
      throw std::invalid_argument("link '" + *r[kLink] + "' does not match expected '" +
                                  std::string(to_string(link)) + "'");
    }
  }

  if (any_present(r, {kSrvCell, kSrvPci, kSrvTac, kSrvRsrp, kSrvRsrq, kSrvRssi, kSrvSinr})) {
    CellObservation c;
    c.cell_id = opt_i64(r, kSrvCell);
    if (auto pci = opt_i64(r, kSrvPci)) c.pci = static_cast<std::int32_t>(*pci);
    c.tac = opt_i64(r, kSrvTac);
    c.rsrp = opt_f64(r, kSrvRsrp);
    c.rsrq = opt_f64(r, kSrvRsrq);
    c.rssi = opt_f64(r, kSrvRssi);
    c.sinr = opt_f64(r, kSrvSinr);
    s.serving = c;
  }

  for (std::size_t k = 0; k < kMaxNeighbors; ++k) {
    if (!any_present(r, {kNbCell1 + k, kNbRsrp1 + k, kNbRsrq1 + k})) continue;
    CellObservation c;
    c.cell_id = opt_i64(r, kNbCell1 + k);
    c.rsrp = opt_f64(r, kNbRsrp1 + k);
    c.rsrq = opt_f64(r, kNbRsrq1 + k);
    s.neighbors.push_back(c);
  }

  if (any_present(r, {kRtt, kDl, kUl, kSent, kDelivered})) {
    E2EMetrics e;
    e.rtt_ms = opt_f64(r, kRtt);
    e.dl_throughput_mbps = opt_f64(r, kDl);
    e.ul_throughput_mbps = opt_f64(r, kUl);
    e.pkts_sent = opt_i64(r, kSent);
    e.pkts_delivered = opt_i64(r, kDelivered);
    s.e2e = e;
  }
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::size_t> column_index(std::string_view name) {
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    if (kDatasetColumns[c] == name) return c;
  }
  return std::nullopt;
}

Row json_to_row(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("record is not a JSON object");
  Row r;
  for (const auto& [key, value] : obj.items()) {
    auto c = column_index(key);
    if (!c) throw std::invalid_argument("unknown key '" + key + "'");
    if (value.is_null()) continue;
    if (value.is_string()) {
      r[*c] = value.get<std::string>();
    } else if (value.is_number_integer()) {
      r[*c] = value.dump();
    } else if (value.is_number_float()) {
      r[*c] = format_double(value.get<double>());
    } else {
      throw std::invalid_argument("key '" + key + "' has unsupported JSON type");
    }
  }
  return r;
}

json row_to_json(const Row& r) {
  json obj = json::object();
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto key = std::string(kDatasetColumns[c]);
    if (!r[c]) {
      obj[key] = nullptr;
    } else if (c == kLink) {
      obj[key] = *r[c];
    } else if (c == kTs || c == kSrvCell || c == kSrvPci || c == kSrvTac ||
               (c >= kNbCell1 && c <= kNbCell3) || c == kSent || c == kDelivered) {
      obj[key] = parse_i64(*r[c], kDatasetColumns[c]);
    } else {
      obj[key] = parse_f64(*r[c], kDatasetColumns[c]);
    }
  }
  return obj;
}

}  // namespace

void write_dataset(std::ostream& os, const FlightDataset& ds, TableFormat format) {
  if (format == TableFormat::Csv) {
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (c) os << ',';
      os << kDatasetColumns[c];
    }
    os << '\n';
    for (const auto& s : ds.samples) {
      const Row r = to_row(s);
      for (std::size_t c = 0; c < kColumnCount; ++c) {
        if (c) os << ',';
        if (r[c]) os << *r[c];
      }
      os << '\n';
    }
  } else {
    for (const auto& s : ds.samples) os << row_to_json(to_row(s)).dump() << '\n';
  }
}

void write_dataset_file(const std::string& path, const FlightDataset& ds, TableFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_dataset(os, ds, format);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

ParsedDataset parse_dataset_text(std::string_view text, LinkType link, std::string flight_id) {
  ParsedDataset out;
  out.dataset.flight_id = std::move(flight_id);
  auto& report = out.report;

  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      auto pos = text.find('\n', start);
      if (pos == std::string_view::npos) pos = text.size();
      lines.push_back(text.substr(start, pos - start));
      start = pos + 1;
    }
  }

  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw std::runtime_error("dataset is empty");

  report.format = trim(lines[first]).front() == '{' ? TableFormat::Jsonl : TableFormat::Csv;

  std::vector<std::size_t> header_map;  // csv field position -> column
  std::size_t data_start = first;
  if (report.format == TableFormat::Csv) {
    auto names = split_commas(trim(lines[first]));
    std::vector<bool> seen(kColumnCount, false);
    for (auto name : names) {
      auto c = column_index(name);
      if (!c) {
        throw std::runtime_error("header: unknown column '" + std::string(name) +
                                 "' (a header line naming the dataset columns is required)");
      }
      if (seen[*c]) throw std::runtime_error("header: duplicate column '" + std::string(name) + "'");
      seen[*c] = true;
      header_map.push_back(*c);
    }
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (!seen[c]) {
        throw std::runtime_error("header: missing column '" + std::string(kDatasetColumns[c]) + "'");
      }
    }
    data_start = first + 1;
  }

  for (std::size_t i = data_start; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty()) continue;
    ++report.data_lines;
    try {
      Row r;
      if (report.format == TableFormat::Csv) {
        auto fields = split_commas(line);
        if (fields.size() != header_map.size()) {
          throw std::invalid_argument("expected " + std::to_string(header_map.size()) +
                                      " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t f = 0; f < fields.size(); ++f) {
          if (!fields[f].empty()) r[header_map[f]] = std::string(fields[f]);
        }
      } else {
        r = json_to_row(json::parse(line));
      }
      Sample s = from_row(r, link);
      normalize_neighbors(s.neighbors);
      out.dataset.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      report.rejected.push_back({i + 1, e.what()});
    }
  }

  if (report.data_lines > 0 &&
      static_cast<double>(report.rejected.size()) >
          kMaxMalformedFraction * static_cast<double>(report.data_lines)) {
    std::ostringstream os;
    os << report.rejected.size() << " of " << report.data_lines
       << " lines malformed (limit 5%); first: line " << report.rejected.front().line << ": "
       << report.rejected.front().message;
    throw std::runtime_error(os.str());
  }

  auto& samples = out.dataset.samples;
  if (samples.empty()) throw std::runtime_error("dataset contains no records");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].timestamp < samples[i - 1].timestamp) ++report.reordered;
  }
  if (report.reordered > 0) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });
  }
  return out;
}

ParsedDataset parse_dataset(const std::string& path, LinkType link) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read dataset file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_dataset_text(buf.str(), link, std::filesystem::path(path).stem().string());
}

}  // namespace uavnet
