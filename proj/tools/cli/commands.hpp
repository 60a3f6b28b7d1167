#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cli/config.hpp"

namespace lesioneval::cli {

// eval: patients.csv, lesions.csv (all lesions) plus *_large.csv for the
// large-lesion stratum, summary.json, summary.txt, summary.csv.
void cmd_eval(const EvalConfig& config);

// froc: froc.csv, froc_large.csv, froc.json, froc.svg.
void cmd_froc(const EvalConfig& config);

// threshold: threshold.json with the per-candidate F2 table.
void cmd_threshold(const EvalConfig& config);

// volume-curve: volume_curve.csv, volume_curve.svg.
void cmd_volume_curve(const EvalConfig& config);

struct StatsOptions {
  /// (method name, eval output directory or metric CSV), at least two.
  std::vector<std::pair<std::string, std::filesystem::path>> methods;
  std::optional<std::size_t> bonferroni_m;
  double alpha = 0.05;
  std::filesystem::path output;
};

// stats: stats.json, stats.csv, stars.txt.
void cmd_stats(const StatsOptions& options);

struct PhantomOptions {
  std::optional<std::filesystem::path> spec;
  std::optional<int> random_count;
  std::uint64_t seed = 0;
  double noise_level = 0.0;
  int boundary_jitter_voxels = 0;
  bool compress = true;
  unsigned threads = 1;
  std::filesystem::path output;
};

// phantom: one directory per patient with prediction, ground truth,
// spec.json and expected.json, plus manifest.json.
void cmd_phantom(const PhantomOptions& options);

struct StandardizeCommand {
  std::filesystem::path input;
  std::filesystem::path reference;  ///< volume or LandmarkProfile JSON
  std::filesystem::path output;
  std::vector<double> percentiles;   ///< empty: defaults
  bool preserve_background = false;
  std::optional<std::filesystem::path> landmarks_out;
};

void cmd_standardize(const StandardizeCommand& options);

/// Per-patient seed of a random cohort.
std::uint64_t cohort_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lesioneval::cli
