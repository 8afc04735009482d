#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uavnet/telemetry.hpp"

namespace uavnet {

// Half-open altitude slab [index*width, (index+1)*width).
struct AltitudeBin {
  std::int64_t index = 0;
  double width = 10.0;

  double lo_m() const { return static_cast<double>(index) * width; }
  double hi_m() const { return static_cast<double>(index + 1) * width; }

  auto operator<=>(const AltitudeBin&) const = default;
};

enum class AltitudeReference { Asl, Agl };

struct BinningOptions {
  double width_m = 10.0;
  AltitudeReference reference = AltitudeReference::Asl;
  double ground_elevation_m = kDefaultGroundElevationM;
};

AltitudeBin altitude_bin_of(double altitude_m, double width_m);

using AltitudeBins = std::map<AltitudeBin, std::vector<Sample>>;

// Every sample with a finite altitude lands in exactly one bin. Throws when
// width <= 0.
AltitudeBins bin_by_altitude(const FlightDataset& ds, const BinningOptions& opts = {});

struct PhaseSegment {
  std::string name;
  TimestampNs t_start = 0;
  TimestampNs t_end = 0;
  // The final segment also owns its end instant so that the segments cover
  // [first, last] sample.
  bool closed_end = false;

  bool contains(TimestampNs t) const {
    return t >= t_start && (t < t_end || (closed_end && t == t_end));
  }
  double minutes() const { return static_cast<double>(t_end - t_start) / 60e9; }
};

// Contiguous segments split at `boundaries`. `names` may be empty (generated
// names) or hold exactly boundaries.size() + 1 entries. Boundaries must be
// strictly increasing and strictly inside the dataset's time span.
std::vector<PhaseSegment> segment_phases(const FlightDataset& ds,
                                         const std::vector<TimestampNs>& boundaries,
                                         const std::vector<std::string>& names = {});

}  // namespace uavnet
