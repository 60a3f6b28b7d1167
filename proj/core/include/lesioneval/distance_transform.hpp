#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lesioneval/volume.hpp"

namespace lesioneval {

/// Squared Euclidean distance from every voxel of `grid` to the nearest seed
/// voxel, with per-axis step lengths `weights` (1,1,1 for index space, the
/// grid spacing for mm). Voxels are +inf when there are no seeds.
///
/// Exact separable transform: three passes of the 1D lower envelope of
/// parabolas (Felzenszwalb & Huttenlocher).
std::vector<double> squared_distance_to_set(const Grid& grid, std::span<const std::size_t> seeds,
                                            std::array<double, 3> weights);

}  // namespace lesioneval
