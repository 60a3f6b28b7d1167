#include "lesioneval/matching.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/error.hpp"

namespace lesioneval {

MatchCriterion MatchCriterion::iou(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InputError(fmt::format("IoU threshold {} outside (0, 1]", threshold));
  }
  return {Kind::iou, threshold};
}

bool MatchCriterion::accepts(std::int64_t overlap, std::int64_t pred_voxels,
                             std::int64_t gt_voxels) const noexcept {
  if (overlap < 1) return false;
  if (kind == Kind::any_overlap) return true;
  const auto uni = static_cast<double>(pred_voxels + gt_voxels - overlap);
  return static_cast<double>(overlap) / uni >= iou_threshold;
}

namespace {

void require_unique_ids(const std::vector<LesionInstance>& lesions, std::string_view side) {
  std::unordered_set<std::int32_t> seen;
  for (const auto& l : lesions) {
    if (!seen.insert(l.id).second) {
      throw InputError(fmt::format("duplicate {} lesion id {}", side, l.id));
    }
  }
}

void require_same_grid(const std::vector<LesionInstance>& pred, const std::vector<LesionInstance>& gt) {
  const Grid* ref = nullptr;
  for (const auto* list : {&pred, &gt}) {
    for (const auto& l : *list) {
      if (ref == nullptr) ref = &l.grid;
      else require_congruent(*ref, l.grid, "match_lesions");
    }
  }
}

}  // namespace

std::vector<OverlapCandidate> overlap_candidates(const std::vector<LesionInstance>& pred,
                                                 const std::vector<LesionInstance>& gt) {
  std::unordered_map<std::size_t, std::int32_t> gt_at;
  for (const auto& g : gt) {
    for (auto v : g.voxels) gt_at.emplace(v, g.id);
  }
  std::vector<OverlapCandidate> out;
  for (const auto& p : pred) {
    std::map<std::int32_t, std::int64_t> counts;
    for (auto v : p.voxels) {
      if (auto it = gt_at.find(v); it != gt_at.end()) ++counts[it->second];
    }
    for (const auto& [gid, c] : counts) out.push_back({p.id, gid, c});
  }
  std::sort(out.begin(), out.end(), [](const OverlapCandidate& a, const OverlapCandidate& b) {
    return a.pred_id != b.pred_id ? a.pred_id < b.pred_id : a.gt_id < b.gt_id;
  });
  return out;
}

MatchResult match_lesions(const std::vector<LesionInstance>& pred, const std::vector<LesionInstance>& gt,
                          MatchCriterion criterion, std::string patient_id) {
  require_unique_ids(pred, "prediction");
  require_unique_ids(gt, "ground-truth");
  require_same_grid(pred, gt);

  std::unordered_map<std::int32_t, std::int64_t> pred_size, gt_size;
  for (const auto& p : pred) pred_size[p.id] = p.voxel_count;
  for (const auto& g : gt) gt_size[g.id] = g.voxel_count;

  auto candidates = overlap_candidates(pred, gt);
  std::erase_if(candidates, [&](const OverlapCandidate& c) {
    return !criterion.accepts(c.overlap_voxels, pred_size[c.pred_id], gt_size[c.gt_id]);
  });
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const OverlapCandidate& a, const OverlapCandidate& b) {
                     if (a.overlap_voxels != b.overlap_voxels) return a.overlap_voxels > b.overlap_voxels;
                     if (a.pred_id != b.pred_id) return a.pred_id < b.pred_id;
                     return a.gt_id < b.gt_id;
                   });

  MatchResult result;
  result.patient_id = std::move(patient_id);
  std::unordered_set<std::int32_t> pred_used, gt_used;
  for (const auto& c : candidates) {
    if (pred_used.contains(c.pred_id) || gt_used.contains(c.gt_id)) continue;
    pred_used.insert(c.pred_id);
    gt_used.insert(c.gt_id);
    result.tp_pairs.push_back({c.pred_id, c.gt_id, c.overlap_voxels});
  }
  for (const auto& p : pred) {
    if (!pred_used.contains(p.id)) result.fp_pred_ids.push_back(p.id);
  }
  for (const auto& g : gt) {
    if (!gt_used.contains(g.id)) result.fn_gt_ids.push_back(g.id);
  }
  std::sort(result.fp_pred_ids.begin(), result.fp_pred_ids.end());
  std::sort(result.fn_gt_ids.begin(), result.fn_gt_ids.end());

  if (result.tp() + result.fp() != static_cast<std::int64_t>(pred.size()) ||
      result.tp() + result.fn() != static_cast<std::int64_t>(gt.size())) {
    throw InvariantError("match_lesions: TP/FP/FN do not partition the instances");
  }
  return result;
}

namespace {

std::unordered_map<std::int32_t, std::vector<std::size_t>> collect_voxels(
    const LabelVolume& labels, const std::unordered_set<std::int32_t>& wanted) {
  std::unordered_map<std::int32_t, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < labels.grid().size(); ++i) {
    const auto l = labels[i];
    if (l != 0 && wanted.contains(l)) out[l].push_back(i);
  }
  return out;
}

}  // namespace

std::vector<PairMasks> detected_pairs_masks(const MatchResult& match, const LabelVolume& pred_labels,
                                            const LabelVolume& gt_labels, MaskExtent extent) {
  require_congruent(pred_labels.grid(), gt_labels.grid(), "detected_pairs_masks");
  std::unordered_set<std::int32_t> pred_ids, gt_ids;
  for (const auto& p : match.tp_pairs) {
    pred_ids.insert(p.pred_id);
    gt_ids.insert(p.gt_id);
  }
  const auto pred_vox = collect_voxels(pred_labels, pred_ids);
  const auto gt_vox = collect_voxels(gt_labels, gt_ids);
  const Grid& g = pred_labels.grid();

  std::vector<PairMasks> out;
  out.reserve(match.tp_pairs.size());
  for (const auto& pair : match.tp_pairs) {
    const auto pit = pred_vox.find(pair.pred_id);
    if (pit == pred_vox.end()) {
      throw InputError(fmt::format("prediction id {} not present in label volume", pair.pred_id));
    }
    const auto git = gt_vox.find(pair.gt_id);
    if (git == gt_vox.end()) {
      throw InputError(fmt::format("ground-truth id {} not present in label volume", pair.gt_id));
    }

    std::array<std::int64_t, 3> lo{0, 0, 0};
    std::array<std::int64_t, 3> hi{g.nx() - 1, g.ny() - 1, g.nz() - 1};
    if (extent == MaskExtent::cropped) {
      lo = {std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max(),
            std::numeric_limits<std::int64_t>::max()};
      hi = {-1, -1, -1};
      for (const auto* list : {&pit->second, &git->second}) {
        for (auto v : *list) {
          const Index3 p = g.index(v);
          const std::array<std::int64_t, 3> c{p.x, p.y, p.z};
          for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
          }
        }
      }
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::max<std::int64_t>(0, lo[a] - 1);
        hi[a] = std::min<std::int64_t>(g.dims()[a] - 1, hi[a] + 1);
      }
    }
    const Grid sub({hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}, g.spacing());
    auto rasterize = [&](const std::vector<std::size_t>& voxels) {
      std::vector<float> data(sub.size(), 0.0f);
      for (auto v : voxels) {
        const Index3 p = g.index(v);
        data[sub.linear(p.x - lo[0], p.y - lo[1], p.z - lo[2])] = 1.0f;
      }
      return Volume(sub, VolumeKind::binary_mask, std::move(data));
    };
    out.push_back({pair, rasterize(pit->second), rasterize(git->second)});
  }
  return out;
}

void to_json(nlohmann::json& j, const MatchResult& m) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : m.tp_pairs) {
    pairs.push_back({{"pred_id", p.pred_id}, {"gt_id", p.gt_id}, {"overlap_voxels", p.overlap_voxels}});
  }
  j = nlohmann::json{{"patient_id", m.patient_id},
                     {"tp_pairs", pairs},
                     {"fp_pred_ids", m.fp_pred_ids},
                     {"fn_gt_ids", m.fn_gt_ids}};
}

}  // namespace lesioneval
