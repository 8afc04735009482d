#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/fixtures.hpp"
#include "uavnet/dataset_io.hpp"

using namespace uavnet;
using namespace uavnet::testing;

namespace {

std::string header() {
  std::string h;
  for (auto c : kDatasetColumns) h += (h.empty() ? "" : ",") + std::string(c);
  return h + "\n";
}

// One CSV row with the given overrides on an otherwise empty record.
std::string row(std::initializer_list<std::pair<std::string_view, std::string>> fields) {
  std::string out;
  for (std::size_t i = 0; i < kDatasetColumns.size(); ++i) {
    if (i) out += ",";
    for (const auto& [k, v] : fields) {
      if (k == kDatasetColumns[i]) out += v;
    }
  }
  return out + "\n";
}

std::string basic_row(std::int64_t ts, std::string rsrp = "-90.5") {
  return row({{"ts_ns", std::to_string(ts)},
              {"lat", "49.1"},
              {"lon", "8.2"},
              {"alt_asl_m", "300"},
              {"link", "cellular"},
              {"srv_cell_id", "8"},
              {"srv_rsrp", rsrp}});
}

std::string to_text(const FlightDataset& ds, TableFormat f) {
  std::ostringstream os;
  write_dataset(os, ds, f);
  return os.str();
}

}  // namespace

TEST_CASE("three well-formed lines give three samples") {
  const auto text = header() + basic_row(1000) + basic_row(2000) + basic_row(3000);
  const auto p = parse_dataset_text(text, LinkType::Cellular);
  REQUIRE(p.dataset.samples.size() == 3);
  CHECK(p.report.rejected.empty());
  CHECK(p.report.reordered == 0);
  const auto& s = p.dataset.samples[1];
  CHECK(s.timestamp == 2000);
  CHECK(*s.serving->cell_id == 8);
  CHECK(*s.serving->rsrp == -90.5);
  CHECK_FALSE(s.e2e.has_value());
  CHECK_FALSE(s.flight.has_value());
}

TEST_CASE("non-numeric rsrp rejects only that line") {
  std::string text = header();
  for (int i = 0; i < 30; ++i) text += basic_row(1000 * (i + 1), i == 7 ? "strong" : "-90");
  const auto p = parse_dataset_text(text, LinkType::Cellular);
  CHECK(p.dataset.samples.size() == 29);
  REQUIRE(p.report.rejected.size() == 1);
  CHECK(p.report.rejected[0].line == 9);  // header is line 1
}

TEST_CASE("more than 5% malformed lines aborts with a summary") {
  std::string text = header();
  for (int i = 0; i < 10; ++i) text += basic_row(1000 * (i + 1), i == 3 ? "x" : "-90");
  CHECK_THROWS_AS(parse_dataset_text(text, LinkType::Cellular), std::runtime_error);
}

TEST_CASE("swapped timestamps are re-sorted and counted") {
  const auto text = header() + basic_row(2000, "-80") + basic_row(1000, "-70");
  const auto p = parse_dataset_text(text, LinkType::Cellular);
  REQUIRE(p.dataset.samples.size() == 2);
  CHECK(p.dataset.samples[0].timestamp == 1000);
  CHECK(*p.dataset.samples[0].serving->rsrp == -70.0);
  CHECK(p.dataset.samples[1].timestamp == 2000);
  CHECK(p.report.reordered == 1);
}

TEST_CASE("header is mandatory and must name every column") {
  CHECK_THROWS(parse_dataset_text(basic_row(1000), LinkType::Cellular));
  std::string partial = "ts_ns,lat,lon\n1,2,3\n";
  CHECK_THROWS(parse_dataset_text(partial, LinkType::Cellular));
}

TEST_CASE("columns may appear in any order") {
  std::vector<std::string_view> cols(kDatasetColumns.begin(), kDatasetColumns.end());
  std::reverse(cols.begin(), cols.end());
  std::string text;
  for (auto c : cols) text += (text.empty() ? "" : ",") + std::string(c);
  text += "\n";
  std::string line;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto c = cols[i];
    if (i) line += ",";
    if (c == "ts_ns") line += "5";
    if (c == "lat") line += "1.5";
    if (c == "lon") line += "2.5";
    if (c == "alt_asl_m") line += "250";
    if (c == "srv_rsrq") line += "-11";
  }
  const auto p = parse_dataset_text(text + line + "\n", LinkType::Cellular);
  REQUIRE(p.dataset.samples.size() == 1);
  CHECK(*p.dataset.samples[0].serving->rsrq == -11.0);
  CHECK(p.dataset.samples[0].position.latitude == 1.5);
}

TEST_CASE("link argument fills empty fields; mismatching rows are rejected") {
  std::string text = header();
  for (int i = 0; i < 40; ++i) {
    text += row({{"ts_ns", std::to_string(i + 1)}, {"lat", "1"}, {"lon", "1"}, {"alt_asl_m", "1"},
                 {"link", i == 5 ? "cellular" : ""}, {"rtt_ms", "40"}});
  }
  const auto p = parse_dataset_text(text, LinkType::Satellite);
  CHECK(p.dataset.samples.size() == 39);
  CHECK(p.report.rejected.size() == 1);
  for (const auto& s : p.dataset.samples) CHECK(s.link == LinkType::Satellite);
}

TEST_CASE("partially populated flight state is malformed") {
  std::string text = header();
  for (int i = 0; i < 25; ++i) {
    if (i == 2) {
      text += row({{"ts_ns", "3"}, {"lat", "1"}, {"lon", "1"}, {"alt_asl_m", "1"}, {"speed_mps", "4"}});
    } else {
      text += basic_row(i + 1);
    }
  }
  const auto p = parse_dataset_text(text, LinkType::Cellular);
  CHECK(p.report.rejected.size() == 1);
}

TEST_CASE("jsonl lines are accepted; missing and null keys are nulls") {
  const std::string text =
      "{\"ts_ns\": 10, \"lat\": 1.0, \"lon\": 2.0, \"alt_asl_m\": 260, \"srv_cell_id\": 4, \"srv_rsrp\": null}\n"
      "{\"ts_ns\": 20, \"lat\": 1.0, \"lon\": 2.0, \"alt_asl_m\": 261, \"rtt_ms\": 33.5}\n";
  const auto p = parse_dataset_text(text, LinkType::Cellular);
  REQUIRE(p.dataset.samples.size() == 2);
  CHECK(p.report.format == TableFormat::Jsonl);
  CHECK(*p.dataset.samples[0].serving->cell_id == 4);
  CHECK_FALSE(p.dataset.samples[0].serving->rsrp.has_value());
  CHECK(*p.dataset.samples[1].e2e->rtt_ms == 33.5);
}

TEST_CASE("writer emits the header in the documented column order") {
  FlightDataset ds;
  ds.samples.push_back(cell_sample(0, 8));
  const auto text = to_text(ds, TableFormat::Csv);
  CHECK(text.substr(0, text.find('\n') + 1) == header());
}

TEST_CASE("round trip serialize -> parse is identity (csv and jsonl)") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto link = seed % 4 == 0 ? LinkType::Satellite : LinkType::Cellular;
    const auto ds = random_dataset(rng, 60, link);
    for (auto f : {TableFormat::Csv, TableFormat::Jsonl}) {
      const auto back = parse_dataset_text(to_text(ds, f), link, ds.flight_id);
      CHECK(back.report.rejected.empty());
      CHECK(back.dataset == ds);
    }
  }
}

TEST_CASE("format_double is shortest round-trip text") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-90.0) == "-90");
  const double v = -93.12345678901234;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("parse_dataset names the unreadable path and uses the stem as flight id") {
  try {
    parse_dataset("/nonexistent/dir/flight.csv", LinkType::Cellular);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/flight.csv") != std::string::npos);
  }
  const auto path = std::filesystem::temp_directory_path() / "uavnet_io_test_flight7.csv";
  {
    std::ofstream out(path);
    out << header() << basic_row(1) << basic_row(2);
  }
  const auto p = parse_dataset(path.string(), LinkType::Cellular);
  CHECK(p.dataset.flight_id == "uavnet_io_test_flight7");
  std::filesystem::remove(path);
}
