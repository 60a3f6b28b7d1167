#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lesioneval/analysis.hpp"
#include "lesioneval/metrics.hpp"
#include "lesioneval/volume.hpp"

namespace lesioneval::cli {

/// Evaluation run settings shared by eval, froc, threshold and volume-curve.
/// Relative paths in a config file resolve against the file's directory.
struct EvalConfig {
  std::filesystem::path manifest;
  std::optional<double> threshold;
  std::filesystem::path threshold_manifest;  ///< split used to pick the threshold when none is given
  std::vector<double> thresholds = default_threshold_sweep();
  DetectionConfig detection;
  Tolerance nsd_tolerance = Tolerance::voxels(2.0);
  SensitivityPooling froc_pooling = SensitivityPooling::pooled;
  double fppi_limit = 15.0;
  double fppi_limit_large = 4.0;
  double large_lesion_ml = 1.0;
  std::vector<double> volume_grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  std::optional<std::size_t> bonferroni_m;
  std::filesystem::path output = "lesioneval-out";
  std::uint64_t seed = 0;
};

/// Parses a config object; `source` names the file in error messages.
EvalConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir, const std::string& source);
EvalConfig load_config(const std::filesystem::path& path);

struct ManifestRow {
  std::string patient_id;
  std::filesystem::path prediction_path;    ///< resolved
  std::filesystem::path ground_truth_path;  ///< resolved
};

/// Rows sorted by patient_id; ids must be unique and files must exist.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);

/// Probability map; masks and other volumes with values in [0, 1] are accepted.
Volume load_prediction(const std::filesystem::path& path);
/// Any nonzero voxel counts as lesion.
Volume load_ground_truth(const std::filesystem::path& path);

/// Loads every row (in parallel) and checks grid congruence per patient.
std::vector<VolumePair> load_cohort(const std::vector<ManifestRow>& rows, unsigned threads);

}  // namespace lesioneval::cli
