#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lesioneval/matching.hpp"
#include "lesioneval/volume.hpp"

namespace lesioneval {

/// Lesion-level detection scores for one patient (one whole-body image).
struct DetectionMetrics {
  std::optional<double> sensitivity;  ///< missing when the patient has no GT lesions
  double fppi = 0.0;
  double f2 = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::string patient_id;
};

/// 5TP / (5TP + 4FN + FP); 1 when there is nothing to detect and nothing detected.
double f2_score(std::int64_t tp, std::int64_t fp, std::int64_t fn);

DetectionMetrics detection_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                                   std::string patient_id = {});
DetectionMetrics detection_metrics(const MatchResult& match);

struct SegmentationMetrics {
  double dice = 0.0;
  double nsd = 0.0;
  std::int32_t pred_id = 0;
  std::int32_t gt_id = 0;
  std::string patient_id;
};

/// 2|A∩B| / (|A|+|B|); two empty masks score 1.
double dice(const Volume& a, const Volume& b);

/// Foreground voxels with at least one 6-neighbour that is background or
/// outside the array.
struct SurfaceSet {
  Grid grid;
  std::vector<std::size_t> voxels;  ///< linear indices, ascending
};

SurfaceSet surface(const Volume& mask);

/// Distance tolerance for surface agreement, in voxel steps or millimetres.
struct Tolerance {
  enum class Unit { voxels, mm };
  double value = 2.0;
  Unit unit = Unit::voxels;

  static Tolerance voxels(double v) { return {v, Unit::voxels}; }
  static Tolerance mm(double v) { return {v, Unit::mm}; }
};

/// Relative slack on tau^2 absorbing rounding in mm-space distances; distances
/// between voxel centres in index space are exact.
inline constexpr double kToleranceSlack = 1e-10;

/// Number of voxels of `a` whose Euclidean distance to the nearest voxel of
/// `b` is at most the tolerance. Uses a distance transform of `b`.
std::int64_t distance_within(const SurfaceSet& a, const SurfaceSet& b, Tolerance tolerance);

/// Normalized surface Dice. Both surfaces empty -> 1; exactly one empty -> 0.
double nsd(const Volume& pred, const Volume& gt, Tolerance tolerance = Tolerance::voxels(2.0));

/// Dice and NSD for every detected pair.
std::vector<SegmentationMetrics> segmentation_metrics(const std::vector<PairMasks>& pairs,
                                                      Tolerance tolerance, const std::string& patient_id);

void to_json(nlohmann::json& j, const DetectionMetrics& m);
void to_json(nlohmann::json& j, const SegmentationMetrics& m);

}  // namespace lesioneval
