#pragma once

#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "lesioneval/analysis.hpp"
#include "lesioneval/metrics.hpp"

namespace lesioneval {

// Deterministic CSV renderings. Numbers use the shortest round-trip decimal;
// missing values are empty cells.

/// patient_id,tp,fp,fn,sensitivity,fppi,f2
std::string detection_csv(std::span<const DetectionMetrics> rows);

/// patient_id,pred_id,gt_id,dice,nsd
std::string segmentation_csv(std::span<const SegmentationMetrics> rows);

/// threshold,fppi,sensitivity
std::string froc_csv(const FrocCurve& curve);

/// min_ml,sensitivity,fppi,gt_lesion_count,tp,fp,fn
std::string volume_strata_csv(std::span<const VolumeStratum> rows);

/// metric,median,q25,q75,n,cell
std::string summary_csv(std::span<const FoldSummary> rows);

/// Fixed-width text table, one "name  median (q25–q75)" line per metric.
std::string summary_table(std::span<const FoldSummary> rows);

void to_json(nlohmann::json& j, const FoldSummary& s);
void to_json(nlohmann::json& j, const FrocCurve& c);
void to_json(nlohmann::json& j, const VolumeStratum& s);
void to_json(nlohmann::json& j, const ThresholdSelection& s);
void to_json(nlohmann::json& j, const LesionInstance& l);

}  // namespace lesioneval
