#pragma once

#include <span>
#include <string>

#include "lesioneval/analysis.hpp"

namespace lesioneval::cli {

// Self-contained SVG plots. The only line that varies between builds is the
// leading version comment.

/// Solid all-lesion series and dashed large-lesion series, AUCs in the legend.
std::string froc_svg(const FrocCurve& all, const FrocCurve& large, double large_lesion_ml);

/// Sensitivity and FPPI against the minimum lesion volume, over a white
/// histogram of the cumulative ground-truth lesion counts.
std::string volume_curve_svg(std::span<const VolumeStratum> strata);

}  // namespace lesioneval::cli
