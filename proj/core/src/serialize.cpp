#include "lesioneval/serialize.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/format.hpp"

namespace lesioneval {

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string detection_csv(std::span<const DetectionMetrics> rows) {
  std::string out = "patient_id,tp,fp,fn,sensitivity,fppi,f2\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.patient_id, r.tp, r.fp, r.fn, opt(r.sensitivity),
                       format_number(r.fppi), format_number(r.f2));
  }
  return out;
}

std::string segmentation_csv(std::span<const SegmentationMetrics> rows) {
  std::string out = "patient_id,pred_id,gt_id,dice,nsd\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.patient_id, r.pred_id, r.gt_id, format_number(r.dice),
                       format_number(r.nsd));
  }
  return out;
}

std::string froc_csv(const FrocCurve& curve) {
  std::string out = "threshold,fppi,sensitivity\n";
  for (const auto& p : curve.points) {
    out += fmt::format("{},{},{}\n", format_number(p.threshold), format_number(p.fppi),
                       format_number(p.sensitivity));
  }
  return out;
}

std::string volume_strata_csv(std::span<const VolumeStratum> rows) {
  std::string out = "min_ml,sensitivity,fppi,gt_lesion_count,tp,fp,fn\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", format_number(r.min_ml), opt(r.sensitivity),
                       format_number(r.fppi), r.gt_lesion_count, r.tp, r.fp, r.fn);
  }
  return out;
}

std::string summary_csv(std::span<const FoldSummary> rows) {
  std::string out = "metric,median,q25,q75,n,cell\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},\"{}\"\n", r.metric, format_number(r.median), format_number(r.q25),
                       format_number(r.q75), r.n, format_summary_cell(r));
  }
  return out;
}

std::string summary_table(std::span<const FoldSummary> rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.metric.size());
  std::string out;
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {}  (n={})\n", r.metric, width, format_summary_cell(r), r.n);
  }
  return out;
}

void to_json(nlohmann::json& j, const FoldSummary& s) {
  j = nlohmann::json{{"metric", s.metric}, {"median", s.median}, {"q25", s.q25},
                     {"q75", s.q75},       {"n", s.n},           {"cell", format_summary_cell(s)}};
}

void to_json(nlohmann::json& j, const FrocCurve& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points) {
    pts.push_back({{"threshold", p.threshold}, {"fppi", p.fppi}, {"sensitivity", p.sensitivity},
                   {"tp", p.tp}, {"fp", p.fp}, {"fn", p.fn}});
  }
  j = nlohmann::json{{"fppi_limit", c.fppi_limit}, {"auc", c.auc}, {"points", pts}};
}

void to_json(nlohmann::json& j, const VolumeStratum& s) {
  j = nlohmann::json{{"min_ml", s.min_ml}, {"fppi", s.fppi}, {"gt_lesion_count", s.gt_lesion_count},
                     {"tp", s.tp},         {"fp", s.fp},     {"fn", s.fn}};
  j["sensitivity"] = s.sensitivity ? nlohmann::json(*s.sensitivity) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const ThresholdSelection& s) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : s.candidates) {
    cands.push_back({{"threshold", c.threshold}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"f2", c.f2}});
  }
  j = nlohmann::json{{"threshold", s.threshold}, {"f2", s.f2}, {"candidates", cands}};
}

void to_json(nlohmann::json& j, const LesionInstance& l) {
  j = nlohmann::json{{"id", l.id}, {"voxel_count", l.voxel_count}, {"volume_ml", l.volume_ml},
                     {"centroid", l.centroid}};
}

}  // namespace lesioneval
