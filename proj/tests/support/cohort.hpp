#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/nifti.hpp"
#include "lesioneval/phantom.hpp"

namespace oracle {

// Three 4.5 mm lesions (two detected) and two FP blobs: tp=2, fp=2, fn=1 at 0.5.
inline lesioneval::PhantomSpec designed_spec(std::uint64_t seed) {
  lesioneval::PhantomSpec s;
  s.grid = lesioneval::Grid({64, 28, 24}, {1.0, 1.0, 1.0});
  s.seed = seed;
  s.gt_lesions = {{1, {7, 7, 12}, 4.5}, {2, {21, 7, 12}, 4.5}, {3, {35, 7, 12}, 4.5}};
  s.detected_ids = {1, 3};
  s.fp_blobs = {{{50, 7, 12}, 4.0, 0.8}, {{30, 20, 12}, 4.0, 0.7}};
  return s;
}

// Writes every pair as NIfTI and returns the manifest path.
inline std::filesystem::path write_cohort(const std::filesystem::path& dir,
                                          const std::vector<lesioneval::VolumePair>& pairs) {
  std::filesystem::create_directories(dir);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : pairs) {
    const auto pred = fmt::format("{}_pred.nii.gz", p.patient_id);
    const auto gt = fmt::format("{}_gt.nii.gz", p.patient_id);
    lesioneval::write_volume(p.prediction, dir / pred);
    lesioneval::write_volume(p.ground_truth, dir / gt);
    rows.push_back({{"patient_id", p.patient_id}, {"prediction_path", pred}, {"ground_truth_path", gt}});
  }
  const auto manifest = dir / "manifest.json";
  std::ofstream(manifest) << rows.dump(2);
  return manifest;
}

inline std::vector<lesioneval::VolumePair> designed_cohort(int n) {
  std::vector<lesioneval::VolumePair> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(lesioneval::generate(designed_spec(static_cast<std::uint64_t>(i)), fmt::format("case{:02d}", i)));
  }
  return out;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
