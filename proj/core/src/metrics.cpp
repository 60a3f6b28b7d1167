#include "lesioneval/metrics.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/distance_transform.hpp"
#include "lesioneval/error.hpp"

namespace lesioneval {

double f2_score(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  const std::int64_t denom = 5 * tp + 4 * fn + fp;
  if (denom == 0) return 1.0;
  return static_cast<double>(5 * tp) / static_cast<double>(denom);
}

DetectionMetrics detection_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::string patient_id) {
  if (tp < 0 || fp < 0 || fn < 0) throw InputError("detection counts must be nonnegative");
  DetectionMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.patient_id = std::move(patient_id);
  if (tp + fn > 0) m.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.fppi = static_cast<double>(fp);
  m.f2 = f2_score(tp, fp, fn);
  return m;
}

DetectionMetrics detection_metrics(const MatchResult& match) {
  return detection_metrics(match.tp(), match.fp(), match.fn(), match.patient_id);
}

double dice(const Volume& a, const Volume& b) {
  require_congruent(a.grid(), b.grid(), "dice");
  std::int64_t na = 0, nb = 0, both = 0;
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const bool fa = da[i] != 0.0f, fb = db[i] != 0.0f;
    na += fa;
    nb += fb;
    both += fa && fb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

SurfaceSet surface(const Volume& mask) {
  const Grid& g = mask.grid();
  const auto d = mask.data();
  SurfaceSet s{g, {}};
  constexpr std::array<std::array<int, 3>, 6> nbrs{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  for (std::int64_t z = 0; z < g.nz(); ++z) {
    for (std::int64_t y = 0; y < g.ny(); ++y) {
      for (std::int64_t x = 0; x < g.nx(); ++x) {
        const std::size_t i = g.linear(x, y, z);
        if (d[i] == 0.0f) continue;
        for (const auto& o : nbrs) {
          const auto xx = x + o[0], yy = y + o[1], zz = z + o[2];
          if (!g.contains(xx, yy, zz) || d[g.linear(xx, yy, zz)] == 0.0f) {
            s.voxels.push_back(i);
            break;
          }
        }
      }
    }
  }
  return s;
}

namespace {

std::array<double, 3> tolerance_weights(const Grid& g, Tolerance t) {
  if (t.unit == Tolerance::Unit::mm) return g.spacing();
  return {1.0, 1.0, 1.0};
}

void validate_tolerance(Tolerance t) {
  if (!(t.value > 0.0) || std::isnan(t.value)) {
    throw InputError(fmt::format("surface tolerance {} must be positive", t.value));
  }
}

}  // namespace

std::int64_t distance_within(const SurfaceSet& a, const SurfaceSet& b, Tolerance tolerance) {
  validate_tolerance(tolerance);
  require_congruent(a.grid, b.grid, "distance_within");
  if (a.voxels.empty() || b.voxels.empty()) return 0;
  const auto dist2 = squared_distance_to_set(b.grid, b.voxels, tolerance_weights(b.grid, tolerance));
  const double limit = tolerance.value * tolerance.value * (1.0 + kToleranceSlack);
  std::int64_t count = 0;
  for (auto v : a.voxels) count += dist2[v] <= limit;
  return count;
}

double nsd(const Volume& pred, const Volume& gt, Tolerance tolerance) {
  validate_tolerance(tolerance);
  require_congruent(pred.grid(), gt.grid(), "nsd");
  const SurfaceSet sp = surface(pred);
  const SurfaceSet sg = surface(gt);
  if (sp.voxels.empty() && sg.voxels.empty()) return 1.0;
  if (sp.voxels.empty() || sg.voxels.empty()) return 0.0;
  const auto hits = distance_within(sp, sg, tolerance) + distance_within(sg, sp, tolerance);
  return static_cast<double>(hits) / static_cast<double>(sp.voxels.size() + sg.voxels.size());
}

std::vector<SegmentationMetrics> segmentation_metrics(const std::vector<PairMasks>& pairs, Tolerance tolerance,
                                                      const std::string& patient_id) {
  std::vector<SegmentationMetrics> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({dice(p.prediction, p.ground_truth), nsd(p.prediction, p.ground_truth, tolerance),
                   p.pair.pred_id, p.pair.gt_id, patient_id});
  }
  return out;
}

void to_json(nlohmann::json& j, const DetectionMetrics& m) {
  j = nlohmann::json{{"patient_id", m.patient_id}, {"tp", m.tp},     {"fp", m.fp},
                     {"fn", m.fn},                 {"fppi", m.fppi}, {"f2", m.f2}};
  if (m.sensitivity) j["sensitivity"] = *m.sensitivity;
  else j["sensitivity"] = nullptr;
}

void to_json(nlohmann::json& j, const SegmentationMetrics& m) {
  j = nlohmann::json{{"patient_id", m.patient_id}, {"pred_id", m.pred_id}, {"gt_id", m.gt_id},
                     {"dice", m.dice},             {"nsd", m.nsd}};
}

}  // namespace lesioneval
