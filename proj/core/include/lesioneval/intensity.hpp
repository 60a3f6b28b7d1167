#pragma once

#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lesioneval/volume.hpp"

namespace lesioneval {

/// Intensity values at fixed percentiles of the foreground histogram.
struct LandmarkProfile {
  std::vector<double> percentiles;  ///< ascending, in [0, 100]
  std::vector<double> landmarks;    ///< nondecreasing, same length (>= 2)
};

/// 0, 20, 40, 60, 80, 95.
std::vector<double> default_landmark_percentiles();

/// Throws InputError unless the profile satisfies its invariants.
void validate_profile(const LandmarkProfile& profile);

/// Percentiles (linear-interpolation quantiles) of the voxels with value > 0.
LandmarkProfile extract_landmarks(const Volume& v, std::span<const double> percentiles);
LandmarkProfile extract_landmarks(const Volume& v);

struct StandardizeOptions {
  /// Leave voxels <= 0 (air background) unchanged instead of mapping them.
  bool preserve_background = false;
};

/// Piecewise-linear map sending source landmark i to reference landmark i,
/// extrapolated along the first and last segments. Source landmarks must be
/// strictly increasing.
double map_intensity(double value, const LandmarkProfile& source, const LandmarkProfile& reference);

Volume standardize(const Volume& v, const LandmarkProfile& source, const LandmarkProfile& reference,
                   StandardizeOptions options = {});

/// Paired samples of the same physical location seen by two adjacent stations.
struct OverlapRegion {
  std::vector<double> station_a;
  std::vector<double> station_b;
};

struct StationGain {
  double gain = 1.0;
  double offset = 0.0;
};

/// Least-squares fit of b ~= gain * a + offset over the overlap.
StationGain fit_station_gain(const OverlapRegion& overlap);

/// Applies gain and offset to every voxel.
Volume apply_station_gain(const Volume& v, StationGain g);

void to_json(nlohmann::json& j, const LandmarkProfile& p);
void from_json(const nlohmann::json& j, LandmarkProfile& p);

}  // namespace lesioneval
