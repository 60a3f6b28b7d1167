#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lesioneval/volume.hpp"

namespace lesioneval {

enum class Connectivity : int { six = 6, eighteen = 18, twenty_six = 26 };

/// Accepts 6, 18 or 26.
Connectivity connectivity_from_int(int value);

/// One connected component of a binary mask.
struct LesionInstance {
  std::int32_t id = 0;
  Grid grid;
  std::vector<std::size_t> voxels;  ///< linear indices, ascending
  std::int64_t voxel_count = 0;
  double volume_ml = 0.0;
  std::array<double, 3> centroid{};  ///< voxel coordinates
};

/// Labels foreground components 1..K in order of their first voxel in
/// x-fastest scan order, so the result is independent of thread count.
/// Two-pass union-find over the forward half of the neighbourhood.
LabelVolume connected_components(const Volume& mask, Connectivity conn = Connectivity::twenty_six);

/// One instance per label with at least `min_voxels` voxels, sorted by
/// descending voxel_count (ties: ascending id).
std::vector<LesionInstance> extract_lesions(const LabelVolume& labels, std::int64_t min_voxels = 1);

/// Keeps instances strictly larger than `min_ml`.
std::vector<LesionInstance> filter_by_volume(const std::vector<LesionInstance>& lesions, double min_ml);

/// CSV with header `id,voxel_count,volume_ml,centroid_x,centroid_y,centroid_z`.
std::string lesions_to_csv(const std::vector<LesionInstance>& lesions);

}  // namespace lesioneval
