#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "../support/fixtures.hpp"
#include "uavnet/report.hpp"

using namespace uavnet;
using namespace uavnet::report;
using namespace uavnet::testing;

namespace {

// Packet totals spread over n samples with the given rtts.
FlightDataset e2e_dataset(std::int64_t sent, std::int64_t delivered, LinkType link, double rtt_base) {
  std::vector<Sample> out;
  for (std::int64_t i = 0; i < sent; ++i) {
    Sample s;
    s.timestamp = at_s(static_cast<double>(i));
    s.link = link;
    E2EMetrics e;
    e.pkts_sent = 1;
    e.pkts_delivered = i < delivered ? 1 : 0;
    if (i < delivered) e.rtt_ms = rtt_base + static_cast<double>(i % 50);
    e.dl_throughput_mbps = 50.0 + static_cast<double>(i % 7);
    e.ul_throughput_mbps = 10.0 + static_cast<double>(i % 3);
    s.e2e = e;
    out.push_back(s);
  }
  return dataset_of(out);
}

std::string render(const Table& t, TableFormat f) {
  std::ostringstream os;
  write_table(os, t, f);
  return os.str();
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return i;
  }
  FAIL("no column " << name);
  return 0;
}

}  // namespace

TEST_CASE("comparison table carries the delivery percentages") {
  const auto cell_ds = e2e_dataset(5159, 5130, LinkType::Cellular, 60.0);
  const auto sat_ds = e2e_dataset(3627, 3602, LinkType::Satellite, 30.0);
  const auto c = compare(cell_ds, sat_ds);
  REQUIRE(c.links.size() == 2);
  CHECK(c.links[0].label == "cellular");
  CHECK(*c.links[0].delivery_pct == 99.44);
  CHECK(*c.links[1].delivery_pct == 99.31);
  const auto t = compare_table(c);
  const auto col = column(t, "delivery_pct");
  CHECK(std::get<double>(t.rows[0][col]) == 99.44);
  CHECK(std::get<double>(t.rows[1][col]) == 99.31);
  CHECK(c.links[0].rtt_f50.value() == 0.0);
  CHECK(c.links[1].rtt_f50.value() > 0.0);
}

TEST_CASE("identical inputs give identical comparison columns") {
  const auto ds = e2e_dataset(500, 490, LinkType::Cellular, 40.0);
  const auto t = compare_table(compare(ds, ds));
  REQUIRE(t.rows.size() == 2);
  for (std::size_t c = 1; c < t.columns.size(); ++c) CHECK(t.rows[0][c] == t.rows[1][c]);
}

TEST_CASE("a link without e2e data cannot be summarized") {
  CHECK_THROWS_AS(summarize_link(cell_trace({1, 2}), "x"), std::invalid_argument);
}

TEST_CASE("csv quoting and empty nulls; jsonl nulls") {
  Table t;
  t.columns = {"a", "b", "c"};
  t.add({Cell{std::string("x,y")}, Cell{}, Cell{std::int64_t{3}}});
  t.add({Cell{std::string("say \"hi\"")}, Cell{1.5}, Cell{std::numeric_limits<double>::quiet_NaN()}});
  CHECK(render(t, TableFormat::Csv) == "a,b,c\n\"x,y\",,3\n\"say \"\"hi\"\"\",1.5,\n");
  std::istringstream in(render(t, TableFormat::Jsonl));
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  CHECK(j["a"] == "x,y");
  CHECK(j["b"].is_null());
  CHECK(j["c"] == 3);
  std::getline(in, line);
  CHECK(nlohmann::json::parse(line)["c"].is_null());
  CHECK_THROWS(t.add({Cell{}}));
}

TEST_CASE("events table has one row per event") {
  std::vector<Sample> s = {cell_sample(0, 1, -100, -10, -95), cell_sample(1, 2)};
  const auto ds = dataset_of(s);
  const auto t = events_table(detect_and_classify(ds));
  REQUIRE(t.rows.size() == 1);
  CHECK(std::get<std::string>(t.rows[0][column(t, "cause")]) == "E1");
  CHECK(std::holds_alternative<std::monostate>(t.rows[0][column(t, "rtt_delta_ms")]));
}

TEST_CASE("cdf table step points end at 1") {
  const auto ds = e2e_dataset(100, 100, LinkType::Cellular, 20.0);
  const auto t = cdf_table(ds, {Metric::Rtt});
  REQUIRE_FALSE(t.rows.empty());
  CHECK(t.rows.size() == 50);  // distinct values
  CHECK(std::get<double>(t.rows.back()[column(t, "cdf")]) == 1.0);
}

TEST_CASE("grid svg is a well-formed document") {
  std::vector<Sample> s;
  for (int i = 0; i < 20; ++i) {
    auto x = cell_sample(i, 1, -80.0 - i);
    x.position.latitude += 0.001 * i;
    s.push_back(x);
  }
  const auto svg = grid_svg(voxelize(dataset_of(s), Metric::Rsrp));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<rect") != std::string::npos);
}
