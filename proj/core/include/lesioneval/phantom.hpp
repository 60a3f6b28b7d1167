#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lesioneval/volume.hpp"

namespace lesioneval {

/// Spherical (in mm) ground-truth lesion; an ellipsoid in voxel space when
/// the spacing is anisotropic. Centre in voxel coordinates.
struct PhantomLesion {
  std::int32_t id = 0;
  std::array<double, 3> center{};
  double radius_mm = 1.0;
};

/// Prediction blob that matches no lesion.
struct PhantomBlob {
  std::array<double, 3> center{};
  double radius_mm = 1.0;
  double peak_prob = 0.8;
};

/// Synthetic cohort member with a designed TP/FP/FN structure.
///
/// Randomness (boundary jitter, background noise) comes from std::mt19937_64
/// seeded with `seed`; doubles take the top 53 bits of one draw and integers
/// in [-j, j] use `draw % (2j + 1)`, so output is identical on every platform.
struct PhantomSpec {
  Grid grid;
  std::uint64_t seed = 0;
  std::vector<PhantomLesion> gt_lesions;
  std::vector<std::int32_t> detected_ids;
  std::vector<PhantomBlob> fp_blobs;
  double noise_level = 0.0;            ///< background noise drawn from [0, noise_level)
  int boundary_jitter_voxels = 0;      ///< per-axis radius perturbation of detected blobs
  double detected_peak_prob = 0.95;    ///< plateau value over detected lesions, >= 0.9
};

/// Minimum number of background voxels between distinct objects.
inline constexpr int kPhantomSeparationVoxels = 2;

struct DesignedCounts {
  double threshold = 0.5;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

/// TP/FP/FN the phantom is built to produce at `threshold` (>= noise_level).
DesignedCounts designed_counts(const PhantomSpec& spec, double threshold = 0.5);

/// Ground-truth mask (union of lesions) and probability map (plateaus over
/// detected lesions and FP blobs, noise elsewhere). Throws InputError for
/// overlapping or touching objects, out-of-bounds objects and unknown ids.
VolumePair generate(const PhantomSpec& spec, std::string patient_id = "phantom");

struct RandomPhantomOptions {
  std::array<std::int64_t, 3> dims{48, 48, 48};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  int min_lesions = 1;
  int max_lesions = 4;
  double min_radius_mm = 3.0;
  double max_radius_mm = 7.0;
  double detect_probability = 0.6;
  int max_fp_blobs = 3;
  double min_fp_peak = 0.1;
  double max_fp_peak = 0.99;
  double noise_level = 0.0;
  int boundary_jitter_voxels = 0;
};

/// Random well-separated spec; the same seed always yields the same spec.
PhantomSpec random_phantom_spec(std::uint64_t seed, const RandomPhantomOptions& options = {});

void to_json(nlohmann::json& j, const PhantomSpec& s);
void from_json(const nlohmann::json& j, PhantomSpec& s);

/// Designed counts at 0.5 plus per-object voxel counts of a generated pair.
nlohmann::json expected_counts_json(const PhantomSpec& spec, const VolumePair& generated);

}  // namespace lesioneval
