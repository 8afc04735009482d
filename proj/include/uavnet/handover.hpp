#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "uavnet/ingest.hpp"
#include "uavnet/telemetry.hpp"

namespace uavnet {

// E1: neighbor stronger by a3_delta (3GPP A3-like). E2: strong but poor
// quality signal (interference). E3: weak serving signal (A2-like). E4: other.
enum class HandoverCause { E1, E2, E3, E4 };

inline constexpr std::size_t kCauseCount = 4;

std::string_view to_string(HandoverCause c);

struct HandoverThresholds {
  double a3_delta_db = 3.0;
  double e2_rsrp_dbm = -95.0;
  double e2_rsrq_db = -18.0;
  double e3_rsrp_dbm = -110.0;

  void check() const;  // throws on non-finite values or a3_delta <= 0
};

// Serving-cell state at the sample preceding a handover.
struct PreHandoverState {
  std::optional<double> rsrp;
  std::optional<double> rsrq;
  std::optional<double> neighbor_rsrp;  // strongest neighbor
};

// Decision ladder evaluated strictly in order E1, E2, E3, E4. A missing value
// makes its guard false.
HandoverCause classify_handover(const PreHandoverState& pre, const HandoverThresholds& th = {});

struct HandoverEvent {
  TimestampNs t = 0;
  std::size_t sample_index = 0;
  CellId from_cell = 0;
  CellId to_cell = 0;
  HandoverCause cause = HandoverCause::E4;
  std::optional<double> pre_rsrp;
  std::optional<double> pre_rsrq;
  std::optional<double> pre_nb_rsrp;
  std::optional<double> rtt_delta_ms;
};

// One event per serving-cell change between non-null ids. Runs of null ids
// are bridged: A, null..., B yields a single A->B event at B's index,
// classified from the last sample that reported A.
std::vector<HandoverEvent> detect_and_classify(const FlightDataset& ds,
                                               const HandoverThresholds& th = {});

struct RateBin {
  TimestampNs bin_start = 0;
  std::array<std::size_t, kCauseCount> per_cause{};
  std::size_t total = 0;
};

// Bins of bin_minutes anchored at t_first and spanning [t_first, t_last].
// Events outside the span are clamped to the nearest edge bin.
std::vector<RateBin> handover_rate(const std::vector<HandoverEvent>& events, TimestampNs t_first,
                                   TimestampNs t_last, double bin_minutes = 10.0);
std::vector<RateBin> handover_rate(const std::vector<HandoverEvent>& events,
                                   const FlightDataset& ds, double bin_minutes = 10.0);

struct PhaseVisibility {
  std::string name;
  std::size_t unique_cells = 0;
  std::size_t handovers = 0;
  double handovers_per_min = 0.0;
};

std::vector<PhaseVisibility> cell_visibility(const FlightDataset& ds,
                                             const std::vector<PhaseSegment>& segments,
                                             const std::vector<HandoverEvent>& events);
std::vector<PhaseVisibility> cell_visibility(const FlightDataset& ds,
                                             const std::vector<PhaseSegment>& segments,
                                             const HandoverThresholds& th = {});

struct RttImpactOptions {
  double window_s = 30.0;
  std::size_t k = 3;
};

struct RttImpactSummary {
  std::size_t n_improve = 0;
  std::size_t n_degrade = 0;
  std::size_t n_unchanged = 0;
  std::size_t n_missing = 0;
  std::optional<double> max_increase;
  std::optional<double> max_decrease;
};

struct RttImpact {
  std::vector<HandoverEvent> events;  // copies with rtt_delta_ms filled
  RttImpactSummary summary;
};

// delta = mean of up to k non-null RTTs closest after t within (t, t+window]
// minus mean of up to k closest before t within [t-window, t).
RttImpact rtt_impact(const std::vector<HandoverEvent>& events, const FlightDataset& ds,
                     const RttImpactOptions& opts = {});

}  // namespace uavnet
