#include "lesioneval/intensity.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/analysis.hpp"
#include "lesioneval/error.hpp"

namespace lesioneval {

std::vector<double> default_landmark_percentiles() { return {0.0, 20.0, 40.0, 60.0, 80.0, 95.0}; }

void validate_profile(const LandmarkProfile& p) {
  if (p.percentiles.size() < 2) throw InputError("landmark profile needs at least 2 percentiles");
  if (p.percentiles.size() != p.landmarks.size()) {
    throw InputError(fmt::format("landmark profile has {} percentiles but {} landmarks", p.percentiles.size(),
                                 p.landmarks.size()));
  }
  for (std::size_t i = 0; i < p.percentiles.size(); ++i) {
    if (!(p.percentiles[i] >= 0.0 && p.percentiles[i] <= 100.0)) {
      throw InputError(fmt::format("percentile {} outside [0, 100]", p.percentiles[i]));
    }
    if (!std::isfinite(p.landmarks[i])) throw InputError(fmt::format("landmark {} is not finite", i));
    if (i > 0 && !(p.percentiles[i] > p.percentiles[i - 1])) {
      throw InputError(fmt::format("percentiles not strictly ascending at index {}", i));
    }
    if (i > 0 && p.landmarks[i] < p.landmarks[i - 1]) {
      throw InputError(fmt::format("landmarks decrease at index {}", i));
    }
  }
}

LandmarkProfile extract_landmarks(const Volume& v, std::span<const double> percentiles) {
  std::vector<double> fg;
  for (float x : v.data()) {
    if (x > 0.0f) fg.push_back(static_cast<double>(x));
  }
  if (fg.empty()) throw InputError("extract_landmarks: volume has no foreground voxels (value > 0)");
  std::sort(fg.begin(), fg.end());
  LandmarkProfile p;
  p.percentiles.assign(percentiles.begin(), percentiles.end());
  for (double pc : percentiles) {
    if (!(pc >= 0.0 && pc <= 100.0)) throw InputError(fmt::format("percentile {} outside [0, 100]", pc));
    p.landmarks.push_back(quantile_sorted(fg, pc / 100.0));
  }
  validate_profile(p);
  return p;
}

LandmarkProfile extract_landmarks(const Volume& v) {
  const auto pcs = default_landmark_percentiles();
  return extract_landmarks(v, pcs);
}

namespace {

void require_compatible(const LandmarkProfile& source, const LandmarkProfile& reference) {
  validate_profile(source);
  validate_profile(reference);
  if (source.percentiles != reference.percentiles) {
    throw InputError("source and reference profiles use different percentile lists");
  }
  for (std::size_t i = 1; i < source.landmarks.size(); ++i) {
    if (!(source.landmarks[i] > source.landmarks[i - 1])) {
      throw InputError(fmt::format("source landmarks not strictly increasing at index {} ({} -> {})", i,
                                   source.landmarks[i - 1], source.landmarks[i]));
    }
  }
}

double map_checked(double value, const std::vector<double>& src, const std::vector<double>& ref) {
  const std::size_t last = src.size() - 1;
  // Segment k spans [src[k], src[k+1]]; values outside use the end segments.
  std::size_t k = 0;
  if (value >= src[last]) {
    k = last - 1;
  } else if (value > src[0]) {
    k = static_cast<std::size_t>(std::upper_bound(src.begin(), src.end(), value) - src.begin()) - 1;
  }
  const double t = (value - src[k]) / (src[k + 1] - src[k]);
  return ref[k] + t * (ref[k + 1] - ref[k]);
}

}  // namespace

double map_intensity(double value, const LandmarkProfile& source, const LandmarkProfile& reference) {
  require_compatible(source, reference);
  return map_checked(value, source.landmarks, reference.landmarks);
}

Volume standardize(const Volume& v, const LandmarkProfile& source, const LandmarkProfile& reference,
                   StandardizeOptions options) {
  require_compatible(source, reference);
  std::vector<float> out(v.size());
  const auto in = v.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (options.preserve_background && in[i] <= 0.0f) {
      out[i] = in[i];
      continue;
    }
    out[i] = static_cast<float>(map_checked(static_cast<double>(in[i]), source.landmarks, reference.landmarks));
  }
  return Volume(v.grid(), VolumeKind::intensity, std::move(out));
}

StationGain fit_station_gain(const OverlapRegion& overlap) {
  const auto& a = overlap.station_a;
  const auto& b = overlap.station_b;
  if (a.size() != b.size()) {
    throw InputError(fmt::format("overlap region: {} station-a samples vs {} station-b samples", a.size(), b.size()));
  }
  if (a.empty()) throw InputError("overlap region is empty");
  const auto n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw InputError(fmt::format("overlap sample {} not finite", i));
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    sxx += da * da;
    sxy += da * (b[i] - mean_b);
  }
  if (!(sxx > 0.0)) throw InputError("overlap region is degenerate: all station-a values are equal");
  const double gain = sxy / sxx;
  return {gain, mean_b - gain * mean_a};
}

Volume apply_station_gain(const Volume& v, StationGain g) {
  std::vector<float> out(v.size());
  const auto in = v.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(g.gain * static_cast<double>(in[i]) + g.offset);
  }
  return Volume(v.grid(), VolumeKind::intensity, std::move(out));
}

void to_json(nlohmann::json& j, const LandmarkProfile& p) {
  j = nlohmann::json{{"percentiles", p.percentiles}, {"landmarks", p.landmarks}};
}

void from_json(const nlohmann::json& j, LandmarkProfile& p) {
  try {
    p.percentiles = j.at("percentiles").get<std::vector<double>>();
    p.landmarks = j.at("landmarks").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("landmark profile: {}", e.what()));
  }
  validate_profile(p);
}

}  // namespace lesioneval
