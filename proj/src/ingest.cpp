#include "uavnet/ingest.hpp"

#include <cmath>
#include <stdexcept>

namespace uavnet {

AltitudeBin altitude_bin_of(double altitude_m, double width_m) {
  if (!(width_m > 0.0)) throw std::invalid_argument("bin width must be positive");
  return {static_cast<std::int64_t>(std::floor(altitude_m / width_m)), width_m};
}

AltitudeBins bin_by_altitude(const FlightDataset& ds, const BinningOptions& opts) {
  if (!(opts.width_m > 0.0)) throw std::invalid_argument("bin width must be positive");
  AltitudeBins bins;
  for (const auto& s : ds.samples) {
    double alt = s.position.altitude_asl;
    if (opts.reference == AltitudeReference::Agl) alt = altitude_agl(s.position, opts.ground_elevation_m);
    if (!std::isfinite(alt)) continue;
    bins[altitude_bin_of(alt, opts.width_m)].push_back(s);
  }
  return bins;
}

std::vector<PhaseSegment> segment_phases(const FlightDataset& ds,
                                         const std::vector<TimestampNs>& boundaries,
                                         const std::vector<std::string>& names) {
  if (ds.samples.empty()) throw std::invalid_argument("segment_phases: empty dataset");
  if (!names.empty() && names.size() != boundaries.size() + 1) {
    throw std::invalid_argument("segment_phases: expected " + std::to_string(boundaries.size() + 1) +
                                " names, got " + std::to_string(names.size()));
  }
  const TimestampNs first = ds.samples.front().timestamp;
  const TimestampNs last = ds.samples.back().timestamp;
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (i > 0 && boundaries[i] <= boundaries[i - 1]) {
      throw std::invalid_argument("segment_phases: boundaries must be strictly increasing");
    }
    if (boundaries[i] <= first || boundaries[i] >= last) {
      throw std::invalid_argument("segment_phases: boundary " + std::to_string(boundaries[i]) +
                                  " outside flight span (" + std::to_string(first) + ", " +
                                  std::to_string(last) + ")");
    }
  }

  std::vector<PhaseSegment> out;
  TimestampNs start = first;
  for (std::size_t i = 0; i <= boundaries.size(); ++i) {
    PhaseSegment seg;
    seg.name = names.empty() ? "phase-" + std::to_string(i + 1) : names[i];
    seg.t_start = start;
    seg.t_end = i < boundaries.size() ? boundaries[i] : last;
    seg.closed_end = i == boundaries.size();
    start = seg.t_end;
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace uavnet
