#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lesioneval/lesions.hpp"
#include "lesioneval/matching.hpp"
#include "lesioneval/metrics.hpp"
#include "lesioneval/volume.hpp"

namespace lesioneval {

/// Knobs shared by every detection analysis.
struct DetectionConfig {
  Connectivity connectivity = Connectivity::twenty_six;
  MatchCriterion criterion = MatchCriterion::any_overlap();
  std::int64_t min_gt_voxels = 50;  ///< annotation floor, applied to ground truth only
  double min_pred_ml = 0.0;        ///< predictions must be strictly larger
  unsigned threads = 1;            ///< 0 = hardware concurrency
};

/// Lesion instances of one patient at one threshold, before stratification.
struct PatientLesions {
  std::string patient_id;
  LabelVolume pred_labels;
  LabelVolume gt_labels;
  std::vector<LesionInstance> pred;
  std::vector<LesionInstance> gt;
};

/// Ground-truth labeling and annotation-floor filtering (threshold independent).
struct GroundTruthLesions {
  LabelVolume labels;
  std::vector<LesionInstance> lesions;
};
GroundTruthLesions prepare_ground_truth(const Volume& gt_mask, const DetectionConfig& config);

PatientLesions extract_patient_lesions(const VolumePair& pair, double threshold, const DetectionConfig& config);
PatientLesions extract_patient_lesions(const VolumePair& pair, const GroundTruthLesions& gt, double threshold,
                                       const DetectionConfig& config);

/// Matches the instances strictly larger than `min_ml` on both sides.
MatchResult match_stratum(const PatientLesions& lesions, double min_ml, const DetectionConfig& config);

/// Sums of lesion counts over a cohort.
struct PooledDetection {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::size_t patients = 0;
  std::optional<double> sensitivity;  ///< sum TP / sum (TP + FN)
  double fppi = 0.0;                 ///< mean FP per patient
  double f2 = 0.0;                   ///< F2 of the summed counts
};
PooledDetection pool_detection(std::span<const DetectionMetrics> per_patient);

/// Per-patient detection metrics at one threshold, in input order.
std::vector<DetectionMetrics> detect_cohort(std::span<const VolumePair> pairs, double threshold,
                                            const DetectionConfig& config, double min_ml = 0.0);

struct FrocPoint {
  double threshold = 0.0;
  double fppi = 0.0;
  double sensitivity = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

struct FrocCurve {
  std::vector<FrocPoint> points;  ///< nondecreasing fppi, all <= fppi_limit
  double fppi_limit = 15.0;
  double auc = 0.0;
};

/// Piecewise-linear area under (fppi, sensitivity) from 0 to `fppi_limit`:
/// flat from 0 to the first point at its sensitivity, linear between points,
/// flat from the last point to the limit. `points` must be sorted by fppi.
double froc_auc(std::span<const FrocPoint> points, double fppi_limit);

/// 0.01, 0.02, ..., 0.99 in descending order.
std::vector<double> default_threshold_sweep();

/// How FROC sensitivity combines patients.
enum class SensitivityPooling {
  pooled,            ///< sum TP / sum (TP + FN) over the cohort
  per_patient_mean,  ///< mean of per-patient sensitivities, patients without lesions skipped
};

/// FROC over a cohort. Thresholds must be strictly descending and in [0, 1].
/// With `min_ml`, both sides keep only lesions strictly larger. FPPI is the
/// mean FP count per patient.
FrocCurve froc(std::span<const VolumePair> pairs, std::span<const double> thresholds, double fppi_limit,
               std::optional<double> min_ml, const DetectionConfig& config,
               SensitivityPooling pooling = SensitivityPooling::pooled);

struct ThresholdCandidate {
  double threshold = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double f2 = 0.0;
};

struct ThresholdSelection {
  double threshold = 0.0;
  double f2 = 0.0;
  std::vector<ThresholdCandidate> candidates;  ///< in the order given
};

/// Candidate maximizing pooled F2 on the split; ties go to the lowest threshold.
ThresholdSelection select_threshold(std::span<const VolumePair> split, std::span<const double> candidates,
                                    const DetectionConfig& config);

struct VolumeStratum {
  double min_ml = 0.0;
  std::optional<double> sensitivity;
  double fppi = 0.0;
  std::int64_t gt_lesion_count = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

/// Cumulative detection metrics over lesions strictly larger than each grid
/// value (ascending). Both sides are filtered before matching.
std::vector<VolumeStratum> volume_stratified(std::span<const VolumePair> pairs, double threshold,
                                             std::span<const double> volume_grid, const DetectionConfig& config);

struct FoldSummary {
  std::string metric;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t n = 0;
};

/// Linear interpolation between order statistics at zero-based position
/// p * (n - 1). `sorted` must be ascending and nonempty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

FoldSummary aggregate(std::string metric, std::span<const double> values);

/// Table cell "median (q25–q75)" with two decimals, e.g. "0.64 (0.50–0.74)".
std::string format_summary_cell(const FoldSummary& s);

enum class IntraClusterMode { to_centroid, mean_pairwise };

struct LabeledFeature {
  std::vector<double> values;
  bool positive = false;
};

struct ClusterMetrics {
  double inter_centroid_distance = 0.0;
  double intra_positive = 0.0;
  double intra_negative = 0.0;
};

ClusterMetrics cluster_metrics(std::span<const LabeledFeature> features,
                               IntraClusterMode mode = IntraClusterMode::to_centroid);

}  // namespace lesioneval
