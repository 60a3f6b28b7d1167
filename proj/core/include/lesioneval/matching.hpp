#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lesioneval/lesions.hpp"
#include "lesioneval/volume.hpp"

namespace lesioneval {

/// When a (prediction, ground truth) pair is a candidate hit.
struct MatchCriterion {
  enum class Kind { any_overlap, iou };
  Kind kind = Kind::any_overlap;
  double iou_threshold = 0.0;  ///< used when kind == iou; must lie in (0, 1]

  static MatchCriterion any_overlap() { return {}; }
  static MatchCriterion iou(double threshold);
  bool accepts(std::int64_t overlap, std::int64_t pred_voxels, std::int64_t gt_voxels) const noexcept;
};

struct TpPair {
  std::int32_t pred_id = 0;
  std::int32_t gt_id = 0;
  std::int64_t overlap_voxels = 0;
  friend bool operator==(const TpPair&, const TpPair&) = default;
};

struct MatchResult {
  std::vector<TpPair> tp_pairs;         ///< in acceptance order
  std::vector<std::int32_t> fp_pred_ids;  ///< ascending
  std::vector<std::int32_t> fn_gt_ids;    ///< ascending
  std::string patient_id;

  std::int64_t tp() const noexcept { return static_cast<std::int64_t>(tp_pairs.size()); }
  std::int64_t fp() const noexcept { return static_cast<std::int64_t>(fp_pred_ids.size()); }
  std::int64_t fn() const noexcept { return static_cast<std::int64_t>(fn_gt_ids.size()); }
};

struct OverlapCandidate {
  std::int32_t pred_id = 0;
  std::int32_t gt_id = 0;
  std::int64_t overlap_voxels = 0;
};

/// Every (pred, gt) pair sharing at least one voxel, ordered by pred id then gt id.
std::vector<OverlapCandidate> overlap_candidates(const std::vector<LesionInstance>& pred,
                                                 const std::vector<LesionInstance>& gt);

/// Greedy one-to-one assignment: candidates accepted by `criterion` are
/// visited by descending overlap (ties: smaller pred id, then smaller gt id)
/// and kept while both ends are free.
MatchResult match_lesions(const std::vector<LesionInstance>& pred,
                          const std::vector<LesionInstance>& gt,
                          MatchCriterion criterion = MatchCriterion::any_overlap(),
                          std::string patient_id = {});

struct PairMasks {
  TpPair pair;
  Volume prediction;
  Volume ground_truth;
};

enum class MaskExtent {
  full,     ///< masks on the full label grid
  cropped,  ///< joint bounding box grown by one voxel, clamped to the grid
};

/// Single-instance binary masks for every TP pair. Cropping preserves Dice
/// and surface-distance results: the margin keeps each surface intact and
/// clamping keeps array-border voxels on the border.
std::vector<PairMasks> detected_pairs_masks(const MatchResult& match, const LabelVolume& pred_labels,
                                            const LabelVolume& gt_labels,
                                            MaskExtent extent = MaskExtent::full);

void to_json(nlohmann::json& j, const MatchResult& m);

}  // namespace lesioneval
