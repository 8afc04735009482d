#include "uavnet/handover.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace uavnet {

std::string_view to_string(HandoverCause c) {
  switch (c) {
    case HandoverCause::E1: return "E1";
    case HandoverCause::E2: return "E2";
    case HandoverCause::E3: return "E3";
    case HandoverCause::E4: return "E4";
  }
  return "?";
}

void HandoverThresholds::check() const {
  if (!std::isfinite(a3_delta_db) || !std::isfinite(e2_rsrp_dbm) || !std::isfinite(e2_rsrq_db) ||
      !std::isfinite(e3_rsrp_dbm)) {
    throw std::invalid_argument("handover thresholds must be finite");
  }
  if (!(a3_delta_db > 0.0)) throw std::invalid_argument("a3 delta must be positive");
}

HandoverCause classify_handover(const PreHandoverState& pre, const HandoverThresholds& th) {
  if (pre.rsrp && pre.neighbor_rsrp && *pre.neighbor_rsrp - *pre.rsrp >= th.a3_delta_db) {
    return HandoverCause::E1;
  }
  if (pre.rsrp && pre.rsrq && *pre.rsrp > th.e2_rsrp_dbm && *pre.rsrq <= th.e2_rsrq_db) {
    return HandoverCause::E2;
  }
  if (pre.rsrp && *pre.rsrp <= th.e3_rsrp_dbm) return HandoverCause::E3;
  return HandoverCause::E4;
}

std::vector<HandoverEvent> detect_and_classify(const FlightDataset& ds,
                                               const HandoverThresholds& th) {
  th.check();
  std::vector<HandoverEvent> events;
  // Index of the most recent sample with a non-null serving cell id.
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto id = serving_cell(ds.samples[i]);
    if (!id) continue;
    if (last) {
      const Sample& prev = ds.samples[*last];
      const CellId prev_id = *serving_cell(prev);
      if (*id != prev_id) {
        PreHandoverState pre{prev.serving->rsrp, prev.serving->rsrq, strongest_neighbor_rsrp(prev)};
        HandoverEvent ev;
        ev.t = ds.samples[i].timestamp;
        ev.sample_index = i;
        ev.from_cell = prev_id;
        ev.to_cell = *id;
        ev.cause = classify_handover(pre, th);
        ev.pre_rsrp = pre.rsrp;
        ev.pre_rsrq = pre.rsrq;
        ev.pre_nb_rsrp = pre.neighbor_rsrp;
        events.push_back(ev);
      }
    }
    last = i;
  }
  return events;
}

std::vector<RateBin> handover_rate(const std::vector<HandoverEvent>& events, TimestampNs t_first,
                                   TimestampNs t_last, double bin_minutes) {
  if (!(bin_minutes > 0.0)) throw std::invalid_argument("bin_minutes must be positive");
  if (t_last < t_first) throw std::invalid_argument("handover_rate: t_last before t_first");
  const double width_ns = bin_minutes * 60e9;
  const auto span = static_cast<double>(t_last - t_first);
  const auto n_bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / width_ns)));

  std::vector<RateBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].bin_start = t_first + static_cast<TimestampNs>(std::llround(width_ns * static_cast<double>(b)));
  }
  for (const auto& ev : events) {
    const double offset = static_cast<double>(ev.t - t_first);
    auto b = offset <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::floor(offset / width_ns));
    b = std::min(b, n_bins - 1);
    ++bins[b].per_cause[static_cast<std::size_t>(ev.cause)];
    ++bins[b].total;
  }
  return bins;
}

std::vector<RateBin> handover_rate(const std::vector<HandoverEvent>& events,
                                   const FlightDataset& ds, double bin_minutes) {
  if (ds.samples.empty()) throw std::invalid_argument("handover_rate: empty dataset");
  return handover_rate(events, ds.samples.front().timestamp, ds.samples.back().timestamp,
                       bin_minutes);
}

std::vector<PhaseVisibility> cell_visibility(const FlightDataset& ds,
                                             const std::vector<PhaseSegment>& segments,
                                             const std::vector<HandoverEvent>& events) {
  std::vector<PhaseVisibility> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    PhaseVisibility v;
    v.name = seg.name;
    std::set<CellId> cells;
    for (const auto& s : ds.samples) {
      if (!seg.contains(s.timestamp)) continue;
      if (auto id = serving_cell(s)) cells.insert(*id);
      for (const auto& nb : s.neighbors) {
        if (nb.cell_id) cells.insert(*nb.cell_id);
      }
    }
    v.unique_cells = cells.size();
    for (const auto& ev : events) v.handovers += seg.contains(ev.t) ? 1 : 0;
    const double minutes = seg.minutes();
    v.handovers_per_min = minutes > 0.0 ? static_cast<double>(v.handovers) / minutes : 0.0;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<PhaseVisibility> cell_visibility(const FlightDataset& ds,
                                             const std::vector<PhaseSegment>& segments,
                                             const HandoverThresholds& th) {
  return cell_visibility(ds, segments, detect_and_classify(ds, th));
}

RttImpact rtt_impact(const std::vector<HandoverEvent>& events, const FlightDataset& ds,
                     const RttImpactOptions& opts) {
  if (!(opts.window_s > 0.0)) throw std::invalid_argument("rtt_impact: window must be positive");
  if (opts.k < 1) throw std::invalid_argument("rtt_impact: k must be >= 1");
  const auto window = static_cast<TimestampNs>(std::llround(opts.window_s * 1e9));
  const auto& samples = ds.samples;
  auto by_time = [](const Sample& s, TimestampNs t) { return s.timestamp < t; };

  RttImpact out;
  out.events = events;
  auto& sum = out.summary;
  for (auto& ev : out.events) {
    // First sample at or after t; the before-side walks backwards from here.
    const auto pivot = std::lower_bound(samples.begin(), samples.end(), ev.t, by_time);

    double before = 0.0;
    std::size_t n_before = 0;
    for (auto it = pivot; it != samples.begin() && n_before < opts.k;) {
      --it;
      if (it->timestamp < ev.t - window) break;
      if (auto rtt = metric_value(*it, Metric::Rtt)) {
        before += *rtt;
        ++n_before;
      }
    }

    double after = 0.0;
    std::size_t n_after = 0;
    auto it = pivot;
    while (it != samples.end() && it->timestamp <= ev.t) ++it;
    for (; it != samples.end() && n_after < opts.k; ++it) {
      if (it->timestamp > ev.t + window) break;
      if (auto rtt = metric_value(*it, Metric::Rtt)) {
        after += *rtt;
        ++n_after;
      }
    }

    if (n_before == 0 || n_after == 0) {
      ev.rtt_delta_ms.reset();
      ++sum.n_missing;
      continue;
    }
    const double delta =
        after / static_cast<double>(n_after) - before / static_cast<double>(n_before);
    ev.rtt_delta_ms = delta;
    if (delta < 0.0) {
      ++sum.n_improve;
      if (!sum.max_decrease || delta < *sum.max_decrease) sum.max_decrease = delta;
    } else if (delta > 0.0) {
      ++sum.n_degrade;
      if (!sum.max_increase || delta > *sum.max_increase) sum.max_increase = delta;
    } else {
      ++sum.n_unchanged;
    }
  }
  return out;
}

}  // namespace uavnet
