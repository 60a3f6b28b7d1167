#include "lesioneval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "lesioneval/error.hpp"
#include "lesioneval/parallel.hpp"

namespace lesioneval {

GroundTruthLesions prepare_ground_truth(const Volume& gt_mask, const DetectionConfig& config) {
  GroundTruthLesions out;
  out.labels = connected_components(gt_mask, config.connectivity);
  out.lesions = extract_lesions(out.labels, config.min_gt_voxels);
  return out;
}

PatientLesions extract_patient_lesions(const VolumePair& pair, const GroundTruthLesions& gt, double threshold,
                                       const DetectionConfig& config) {
  PatientLesions out;
  out.patient_id = pair.patient_id;
  out.pred_labels = connected_components(binarize(pair.prediction, threshold), config.connectivity);
  out.pred = filter_by_volume(extract_lesions(out.pred_labels, 1), config.min_pred_ml);
  out.gt_labels = gt.labels;
  out.gt = gt.lesions;
  return out;
}

PatientLesions extract_patient_lesions(const VolumePair& pair, double threshold, const DetectionConfig& config) {
  return extract_patient_lesions(pair, prepare_ground_truth(pair.ground_truth, config), threshold, config);
}

MatchResult match_stratum(const PatientLesions& lesions, double min_ml, const DetectionConfig& config) {
  return match_lesions(filter_by_volume(lesions.pred, min_ml), filter_by_volume(lesions.gt, min_ml),
                       config.criterion, lesions.patient_id);
}

PooledDetection pool_detection(std::span<const DetectionMetrics> per_patient) {
  PooledDetection p;
  for (const auto& m : per_patient) {
    p.tp += m.tp;
    p.fp += m.fp;
    p.fn += m.fn;
  }
  p.patients = per_patient.size();
  if (p.tp + p.fn > 0) p.sensitivity = static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fn);
  if (p.patients > 0) p.fppi = static_cast<double>(p.fp) / static_cast<double>(p.patients);
  p.f2 = f2_score(p.tp, p.fp, p.fn);
  return p;
}

namespace {

void require_nonempty(std::span<const VolumePair> pairs, std::string_view what) {
  if (pairs.empty()) throw InputError(fmt::format("{}: empty patient set", what));
}

void require_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputError(fmt::format("threshold {} outside [0,1]", t));
}

}  // namespace

std::vector<DetectionMetrics> detect_cohort(std::span<const VolumePair> pairs, double threshold,
                                            const DetectionConfig& config, double min_ml) {
  require_threshold(threshold);
  std::vector<DetectionMetrics> out(pairs.size());
  parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
    const auto lesions = extract_patient_lesions(pairs[i], threshold, config);
    out[i] = detection_metrics(match_stratum(lesions, min_ml, config));
  });
  return out;
}

double froc_auc(std::span<const FrocPoint> points, double fppi_limit) {
  if (points.empty()) return 0.0;
  double area = points.front().sensitivity * points.front().fppi;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& a = points[i - 1];
    const auto& b = points[i];
    area += 0.5 * (a.sensitivity + b.sensitivity) * (b.fppi - a.fppi);
  }
  area += points.back().sensitivity * (fppi_limit - points.back().fppi);
  return area;
}

std::vector<double> default_threshold_sweep() {
  std::vector<double> t;
  for (int i = 99; i >= 1; --i) t.push_back(i / 100.0);
  return t;
}

namespace {

struct Counts {
  std::int64_t tp = 0, fp = 0, fn = 0;
};

// counts[patient][threshold] for every threshold, GT labelled once per patient.
std::vector<std::vector<Counts>> sweep_counts(std::span<const VolumePair> pairs, std::span<const double> thresholds,
                                              double min_ml, const DetectionConfig& config) {
  std::vector<std::vector<Counts>> counts(pairs.size(), std::vector<Counts>(thresholds.size()));
  parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
    const auto gt = prepare_ground_truth(pairs[i].ground_truth, config);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      const auto lesions = extract_patient_lesions(pairs[i], gt, thresholds[t], config);
      const auto m = match_stratum(lesions, min_ml, config);
      counts[i][t] = {m.tp(), m.fp(), m.fn()};
    }
  });
  return counts;
}

}  // namespace

FrocCurve froc(std::span<const VolumePair> pairs, std::span<const double> thresholds, double fppi_limit,
               std::optional<double> min_ml, const DetectionConfig& config, SensitivityPooling pooling) {
  require_nonempty(pairs, "froc");
  if (thresholds.empty()) throw InputError("froc: empty threshold list");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    require_threshold(thresholds[i]);
    if (i > 0 && !(thresholds[i] < thresholds[i - 1])) {
      throw InputError(fmt::format("froc: thresholds must be strictly descending (index {})", i));
    }
  }
  if (!(fppi_limit > 0.0)) throw InputError(fmt::format("froc: fppi_limit {} must be positive", fppi_limit));

  const auto counts = sweep_counts(pairs, thresholds, min_ml.value_or(0.0), config);
  FrocCurve curve;
  curve.fppi_limit = fppi_limit;
  const auto n = static_cast<double>(pairs.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    Counts sum;
    double sens_total = 0.0;
    std::int64_t with_lesions = 0;
    for (const auto& patient : counts) {
      const auto& c = patient[t];
      sum.tp += c.tp;
      sum.fp += c.fp;
      sum.fn += c.fn;
      if (c.tp + c.fn > 0) {
        sens_total += static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        ++with_lesions;
      }
    }
    if (sum.tp + sum.fn == 0) {
      throw InputError(min_ml ? fmt::format("froc: no ground-truth lesions larger than {} ml", *min_ml)
                              : std::string("froc: no ground-truth lesions in the cohort"));
    }
    FrocPoint p;
    p.threshold = thresholds[t];
    p.tp = sum.tp;
    p.fp = sum.fp;
    p.fn = sum.fn;
    p.sensitivity = pooling == SensitivityPooling::pooled
                        ? static_cast<double>(sum.tp) / static_cast<double>(sum.tp + sum.fn)
                        : sens_total / static_cast<double>(with_lesions);
    p.fppi = static_cast<double>(sum.fp) / n;
    curve.points.push_back(p);
  }
  // Merging blobs can lower the FP count at a lower threshold; keep the curve a function of fppi.
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const FrocPoint& a, const FrocPoint& b) { return a.fppi < b.fppi; });
  std::erase_if(curve.points, [&](const FrocPoint& p) { return p.fppi > fppi_limit; });
  curve.auc = froc_auc(curve.points, fppi_limit);
  return curve;
}

ThresholdSelection select_threshold(std::span<const VolumePair> split, std::span<const double> candidates,
                                    const DetectionConfig& config) {
  require_nonempty(split, "select_threshold");
  if (candidates.empty()) throw InputError("select_threshold: empty candidate list");
  for (double t : candidates) require_threshold(t);

  const auto counts = sweep_counts(split, candidates, 0.0, config);
  ThresholdSelection sel;
  bool have = false;
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    ThresholdCandidate c;
    c.threshold = candidates[t];
    for (const auto& patient : counts) {
      c.tp += patient[t].tp;
      c.fp += patient[t].fp;
      c.fn += patient[t].fn;
    }
    c.f2 = f2_score(c.tp, c.fp, c.fn);
    sel.candidates.push_back(c);
    if (!have || c.f2 > sel.f2 || (c.f2 == sel.f2 && c.threshold < sel.threshold)) {
      sel.threshold = c.threshold;
      sel.f2 = c.f2;
      have = true;
    }
  }
  return sel;
}

std::vector<VolumeStratum> volume_stratified(std::span<const VolumePair> pairs, double threshold,
                                             std::span<const double> volume_grid, const DetectionConfig& config) {
  require_nonempty(pairs, "volume_stratified");
  require_threshold(threshold);
  if (volume_grid.empty()) throw InputError("volume_stratified: empty volume grid");
  for (std::size_t i = 0; i < volume_grid.size(); ++i) {
    if (!(volume_grid[i] >= 0.0)) {
      throw InputError(fmt::format("volume_stratified: grid value {} must be nonnegative", volume_grid[i]));
    }
    if (i > 0 && volume_grid[i] < volume_grid[i - 1]) {
      throw InputError(fmt::format("volume_stratified: grid not ascending at index {}", i));
    }
  }

  std::vector<std::vector<DetectionMetrics>> per(pairs.size());
  parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
    const auto lesions = extract_patient_lesions(pairs[i], threshold, config);
    for (double min_ml : volume_grid) per[i].push_back(detection_metrics(match_stratum(lesions, min_ml, config)));
  });

  std::vector<VolumeStratum> out;
  for (std::size_t g = 0; g < volume_grid.size(); ++g) {
    std::vector<DetectionMetrics> column;
    column.reserve(pairs.size());
    for (const auto& p : per) column.push_back(p[g]);
    const auto pooled = pool_detection(column);
    VolumeStratum s;
    s.min_ml = volume_grid[g];
    s.sensitivity = pooled.sensitivity;
    s.fppi = pooled.fppi;
    s.gt_lesion_count = pooled.tp + pooled.fn;
    s.tp = pooled.tp;
    s.fp = pooled.fp;
    s.fn = pooled.fn;
    out.push_back(s);
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError(fmt::format("quantile probability {} outside [0,1]", p));
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

FoldSummary aggregate(std::string metric, std::span<const double> values) {
  if (values.empty()) throw InputError(fmt::format("aggregate '{}': empty input", metric));
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (std::isnan(v)) throw InputError(fmt::format("aggregate '{}': NaN value", metric));
  }
  std::sort(sorted.begin(), sorted.end());
  FoldSummary s;
  s.metric = std::move(metric);
  s.n = sorted.size();
  s.median = quantile_sorted(sorted, 0.5);
  s.q25 = quantile_sorted(sorted, 0.25);
  s.q75 = quantile_sorted(sorted, 0.75);
  return s;
}

std::string format_summary_cell(const FoldSummary& s) {
  return fmt::format("{:.2f} ({:.2f}–{:.2f})", s.median, s.q25, s.q75);
}

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> centroid_of(const std::vector<const LabeledFeature*>& group, std::size_t dim) {
  std::vector<double> c(dim, 0.0);
  for (const auto* f : group) {
    for (std::size_t i = 0; i < dim; ++i) c[i] += f->values[i];
  }
  for (auto& v : c) v /= static_cast<double>(group.size());
  return c;
}

double intra(const std::vector<const LabeledFeature*>& group, std::span<const double> centroid,
             IntraClusterMode mode) {
  double sum = 0.0;
  if (mode == IntraClusterMode::to_centroid) {
    for (const auto* f : group) sum += euclidean(f->values, centroid);
    return sum / static_cast<double>(group.size());
  }
  if (group.size() < 2) return 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (std::size_t j = i + 1; j < group.size(); ++j) {
      sum += euclidean(group[i]->values, group[j]->values);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace

ClusterMetrics cluster_metrics(std::span<const LabeledFeature> features, IntraClusterMode mode) {
  if (features.empty()) throw InputError("cluster_metrics: no features");
  const std::size_t dim = features.front().values.size();
  std::vector<const LabeledFeature*> pos, neg;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].values.size() != dim) {
      throw InputError(fmt::format("cluster_metrics: feature {} has dimension {}, expected {}", i,
                                   features[i].values.size(), dim));
    }
    (features[i].positive ? pos : neg).push_back(&features[i]);
  }
  if (pos.empty()) throw InputError("cluster_metrics: no positive features");
  if (neg.empty()) throw InputError("cluster_metrics: no negative features");
  const auto cp = centroid_of(pos, dim);
  const auto cn = centroid_of(neg, dim);
  return {euclidean(cp, cn), intra(pos, cp, mode), intra(neg, cn, mode)};
}

}  // namespace lesioneval
