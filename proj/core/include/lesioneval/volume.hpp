#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lesioneval {

enum class VolumeKind { intensity, probability, binary_mask, integer_labels };

std::string_view to_string(VolumeKind kind);
VolumeKind parse_volume_kind(std::string_view name);

struct Index3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;
  friend bool operator==(const Index3&, const Index3&) = default;
};

/// Voxel lattice shared by every volume: dimensions plus mm spacing.
/// Data is laid out x-fastest: linear = x + nx * (y + ny * z).
class Grid {
 public:
  Grid() = default;
  Grid(std::array<std::int64_t, 3> dims, std::array<double, 3> spacing);

  const std::array<std::int64_t, 3>& dims() const noexcept { return dims_; }
  const std::array<double, 3>& spacing() const noexcept { return spacing_; }
  std::int64_t nx() const noexcept { return dims_[0]; }
  std::int64_t ny() const noexcept { return dims_[1]; }
  std::int64_t nz() const noexcept { return dims_[2]; }
  std::size_t size() const noexcept { return size_; }

  /// Single voxel volume in ml (spacing is mm, 1 ml = 1000 mm^3).
  double voxel_volume_ml() const noexcept;

  std::size_t linear(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return static_cast<std::size_t>(x + dims_[0] * (y + dims_[1] * z));
  }
  std::size_t linear(const Index3& i) const noexcept { return linear(i.x, i.y, i.z); }
  Index3 index(std::size_t linear) const noexcept;
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_[0] && y < dims_[1] && z < dims_[2];
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::array<std::int64_t, 3> dims_{0, 0, 0};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::size_t size_ = 0;
};

/// Throws InputError unless both grids have identical dims and spacing.
void require_congruent(const Grid& a, const Grid& b, std::string_view context);

/// Scalar 3D image. Immutable once constructed; the constructor validates
/// the value domain of the declared kind.
class Volume {
 public:
  Volume() = default;
  Volume(Grid grid, VolumeKind kind, std::vector<float> data);

  /// Zero-filled volume of the given kind.
  static Volume zeros(Grid grid, VolumeKind kind);

  const Grid& grid() const noexcept { return grid_; }
  VolumeKind kind() const noexcept { return kind_; }
  std::span<const float> data() const noexcept { return data_; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float at(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return data_[grid_.linear(x, y, z)];
  }
  std::size_t size() const noexcept { return data_.size(); }

  /// Same data reinterpreted as another kind; validates the new domain.
  Volume with_kind(VolumeKind kind) const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Grid grid_;
  VolumeKind kind_ = VolumeKind::intensity;
  std::vector<float> data_;
};

/// Integer label image produced by connected-component labeling.
/// Background is 0, components are 1..label_count.
class LabelVolume {
 public:
  LabelVolume() = default;
  LabelVolume(Grid grid, std::vector<std::int32_t> labels, std::int32_t label_count);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const std::int32_t> labels() const noexcept { return labels_; }
  std::int32_t operator[](std::size_t i) const noexcept { return labels_[i]; }
  std::int32_t label_count() const noexcept { return label_count_; }

  /// Float copy tagged integer-labels, for writing to disk.
  Volume to_volume() const;
  static LabelVolume from_volume(const Volume& v);

  friend bool operator==(const LabelVolume&, const LabelVolume&) = default;

 private:
  Grid grid_;
  std::vector<std::int32_t> labels_;
  std::int32_t label_count_ = 0;
};

struct VolumePair {
  Volume prediction;
  Volume ground_truth;
  std::string patient_id;

  VolumePair() = default;
  /// Validates grid congruence.
  VolumePair(Volume prediction, Volume ground_truth, std::string patient_id);
};

/// Voxel is 1 iff value > threshold (strict). Threshold must lie in [0, 1].
Volume binarize(const Volume& probability, double threshold);

/// Nonzero voxels -> 1. Accepts any kind; used for reference masks stored
/// with arbitrary label values (1, 255, ...).
Volume to_binary_mask(const Volume& v);

std::size_t count_foreground(const Volume& mask);

}  // namespace lesioneval
