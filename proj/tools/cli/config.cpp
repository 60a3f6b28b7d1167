#include "cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/error.hpp"
#include "lesioneval/nifti.hpp"
#include "lesioneval/parallel.hpp"

namespace lesioneval::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kConfigKeys = {
    "manifest",      "threshold",        "threshold_manifest", "thresholds",   "connectivity",
    "criterion",     "min_gt_voxels",    "min_pred_ml",        "nsd_tolerance", "fppi_limit",
    "fppi_limit_large", "large_lesion_ml", "volume_grid",      "bonferroni_m", "output",
    "seed",          "threads",          "froc_sensitivity"};

template <typename T>
T field(const json& j, const char* key, const std::string& source) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(fmt::format("{}: field '{}': {}", source, key, e.what()));
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

MatchCriterion parse_criterion(const json& j, const std::string& source) {
  std::string kind;
  double tau = 0.0;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object()) {
    kind = field<std::string>(j, "kind", source + " criterion");
    if (j.contains("threshold")) tau = field<double>(j, "threshold", source + " criterion");
  } else {
    throw InputError(fmt::format("{}: field 'criterion': expected string or object", source));
  }
  if (kind == "any-overlap") return MatchCriterion::any_overlap();
  if (kind == "iou") {
    try {
      return MatchCriterion::iou(tau);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: field 'criterion.threshold': {}", source, e.what()));
    }
  }
  throw InputError(fmt::format("{}: field 'criterion': unknown kind '{}' (any-overlap or iou)", source, kind));
}

Tolerance parse_tolerance(const json& j, const std::string& source) {
  Tolerance t;
  if (j.is_number()) {
    t = Tolerance::voxels(j.get<double>());
  } else if (j.is_object()) {
    if (j.contains("voxels")) {
      t = Tolerance::voxels(field<double>(j, "voxels", source + " nsd_tolerance"));
    } else if (j.contains("mm")) {
      t = Tolerance::mm(field<double>(j, "mm", source + " nsd_tolerance"));
    } else {
      throw InputError(fmt::format("{}: field 'nsd_tolerance': expected {{\"voxels\": x}} or {{\"mm\": x}}", source));
    }
  } else {
    throw InputError(fmt::format("{}: field 'nsd_tolerance': expected number or object", source));
  }
  if (!(t.value > 0.0) || !std::isfinite(t.value)) {
    throw InputError(fmt::format("{}: field 'nsd_tolerance': must be finite and > 0", source));
  }
  return t;
}

void require_positive(double v, const char* key, const std::string& source) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InputError(fmt::format("{}: field '{}': must be finite and > 0", source, key));
  }
}

}  // namespace

EvalConfig parse_config(const json& j, const fs::path& base_dir, const std::string& source) {
  if (!j.is_object()) throw InputError(fmt::format("{}: expected a JSON object", source));
  for (const auto& [key, value] : j.items()) {
    if (!kConfigKeys.contains(key)) throw InputError(fmt::format("{}: unknown field '{}'", source, key));
  }
  EvalConfig c;
  c.detection.threads = 0;
  if (j.contains("manifest")) c.manifest = resolve(base_dir, field<std::string>(j, "manifest", source));
  if (j.contains("threshold") && !j.at("threshold").is_null()) {
    const double t = field<double>(j, "threshold", source);
    if (!(t >= 0.0 && t <= 1.0)) throw InputError(fmt::format("{}: field 'threshold': must lie in [0, 1]", source));
    c.threshold = t;
  }
  if (j.contains("threshold_manifest")) {
    c.threshold_manifest = resolve(base_dir, field<std::string>(j, "threshold_manifest", source));
  }
  if (j.contains("thresholds")) {
    c.thresholds = field<std::vector<double>>(j, "thresholds", source);
    if (c.thresholds.empty()) throw InputError(fmt::format("{}: field 'thresholds': empty", source));
    for (double t : c.thresholds) {
      if (!(t >= 0.0 && t <= 1.0)) {
        throw InputError(fmt::format("{}: field 'thresholds': value {} outside [0, 1]", source, t));
      }
    }
    std::sort(c.thresholds.begin(), c.thresholds.end(), std::greater<>());
    if (std::adjacent_find(c.thresholds.begin(), c.thresholds.end()) != c.thresholds.end()) {
      throw InputError(fmt::format("{}: field 'thresholds': duplicate values", source));
    }
  }
  if (j.contains("connectivity")) {
    try {
      c.detection.connectivity = connectivity_from_int(field<int>(j, "connectivity", source));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: field 'connectivity': {}", source, e.what()));
    }
  }
  if (j.contains("criterion")) c.detection.criterion = parse_criterion(j.at("criterion"), source);
  if (j.contains("min_gt_voxels")) {
    c.detection.min_gt_voxels = field<std::int64_t>(j, "min_gt_voxels", source);
    if (c.detection.min_gt_voxels < 1) {
      throw InputError(fmt::format("{}: field 'min_gt_voxels': must be >= 1", source));
    }
  }
  if (j.contains("min_pred_ml")) {
    c.detection.min_pred_ml = field<double>(j, "min_pred_ml", source);
    if (!(c.detection.min_pred_ml >= 0.0)) {
      throw InputError(fmt::format("{}: field 'min_pred_ml': must be >= 0", source));
    }
  }
  if (j.contains("nsd_tolerance")) c.nsd_tolerance = parse_tolerance(j.at("nsd_tolerance"), source);
  if (j.contains("froc_sensitivity")) {
    const auto mode = field<std::string>(j, "froc_sensitivity", source);
    if (mode == "pooled") {
      c.froc_pooling = SensitivityPooling::pooled;
    } else if (mode == "per-patient-mean") {
      c.froc_pooling = SensitivityPooling::per_patient_mean;
    } else {
      throw InputError(
          fmt::format("{}: field 'froc_sensitivity': unknown mode '{}' (pooled or per-patient-mean)", source, mode));
    }
  }
  if (j.contains("fppi_limit")) c.fppi_limit = field<double>(j, "fppi_limit", source);
  if (j.contains("fppi_limit_large")) c.fppi_limit_large = field<double>(j, "fppi_limit_large", source);
  if (j.contains("large_lesion_ml")) c.large_lesion_ml = field<double>(j, "large_lesion_ml", source);
  require_positive(c.fppi_limit, "fppi_limit", source);
  require_positive(c.fppi_limit_large, "fppi_limit_large", source);
  if (!(c.large_lesion_ml >= 0.0)) throw InputError(fmt::format("{}: field 'large_lesion_ml': must be >= 0", source));
  if (j.contains("volume_grid")) {
    c.volume_grid = field<std::vector<double>>(j, "volume_grid", source);
    if (c.volume_grid.empty()) throw InputError(fmt::format("{}: field 'volume_grid': empty", source));
    for (std::size_t i = 0; i < c.volume_grid.size(); ++i) {
      if (!(c.volume_grid[i] >= 0.0) || (i > 0 && !(c.volume_grid[i] > c.volume_grid[i - 1]))) {
        throw InputError(fmt::format("{}: field 'volume_grid': must be nonnegative and strictly ascending", source));
      }
    }
  }
  if (j.contains("bonferroni_m") && !j.at("bonferroni_m").is_null()) {
    const auto m = field<std::int64_t>(j, "bonferroni_m", source);
    if (m < 1) throw InputError(fmt::format("{}: field 'bonferroni_m': must be >= 1", source));
    c.bonferroni_m = static_cast<std::size_t>(m);
  }
  if (j.contains("output")) c.output = resolve(base_dir, field<std::string>(j, "output", source));
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", source);
  if (j.contains("threads")) c.detection.threads = field<unsigned>(j, "threads", source);
  return c;
}

EvalConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("{}: cannot open config", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  return parse_config(j, path.parent_path(), path.string());
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  const std::string source = path.string();
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("{}: cannot open manifest", source));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: invalid JSON: {}", source, e.what()));
  }
  if (!j.is_array()) throw InputError(fmt::format("{}: manifest must be a JSON array", source));
  if (j.empty()) throw InputError(fmt::format("{}: manifest has no rows", source));

  const fs::path base = path.parent_path();
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = fmt::format("{} row {}", source, i);
    const auto& r = j[i];
    if (!r.is_object()) throw InputError(fmt::format("{}: expected an object", where));
    ManifestRow row;
    row.patient_id = field<std::string>(r, "patient_id", where);
    if (row.patient_id.empty()) throw InputError(fmt::format("{}: field 'patient_id': empty", where));
    if (row.patient_id.find_first_of(",\"\r\n") != std::string::npos) {
      throw InputError(fmt::format("{}: field 'patient_id': commas, quotes and line breaks are not allowed", where));
    }
    if (!seen.insert(row.patient_id).second) {
      throw InputError(fmt::format("{}: field 'patient_id': duplicate '{}'", where, row.patient_id));
    }
    row.prediction_path = resolve(base, field<std::string>(r, "prediction_path", where));
    row.ground_truth_path = resolve(base, field<std::string>(r, "ground_truth_path", where));
    for (const auto& [key, p] : {std::pair{"prediction_path", row.prediction_path},
                                 std::pair{"ground_truth_path", row.ground_truth_path}}) {
      if (!fs::exists(p)) {
        throw InputError(fmt::format("{} ({}): field '{}': file not found: {}", where, row.patient_id, key, p.string()));
      }
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(),
            [](const ManifestRow& a, const ManifestRow& b) { return a.patient_id < b.patient_id; });
  return rows;
}

void write_manifest(const std::vector<ManifestRow>& rows, const fs::path& path) {
  json j = json::array();
  const fs::path base = path.parent_path();
  for (const auto& r : rows) {
    j.push_back({{"patient_id", r.patient_id},
                 {"prediction_path", r.prediction_path.lexically_relative(base).generic_string()},
                 {"ground_truth_path", r.ground_truth_path.lexically_relative(base).generic_string()}});
  }
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("{}: cannot write manifest", path.string()));
  out << j.dump(2) << '\n';
}

Volume load_prediction(const fs::path& path) {
  Volume v = read_volume(path);
  if (v.kind() == VolumeKind::probability) return v;
  try {
    return v.with_kind(VolumeKind::probability);
  } catch (const InputError&) {
    throw InputError(fmt::format("{}: prediction values must lie in [0, 1]", path.string()));
  }
}

Volume load_ground_truth(const fs::path& path) { return to_binary_mask(read_volume(path)); }

std::vector<VolumePair> load_cohort(const std::vector<ManifestRow>& rows, unsigned threads) {
  std::vector<VolumePair> pairs(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const auto& row = rows[i];
    try {
      pairs[i] = VolumePair(load_prediction(row.prediction_path), load_ground_truth(row.ground_truth_path),
                            row.patient_id);
    } catch (const InputError& e) {
      throw InputError(fmt::format("patient {}: {}", row.patient_id, e.what()));
    }
  });
  return pairs;
}

}  // namespace lesioneval::cli
