#include "lesioneval/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "lesioneval/error.hpp"

namespace lesioneval {

std::string_view to_string(VolumeKind kind) {
  switch (kind) {
    case VolumeKind::intensity: return "intensity";
    case VolumeKind::probability: return "probability";
    case VolumeKind::binary_mask: return "binary-mask";
    case VolumeKind::integer_labels: return "integer-labels";
  }
  return "intensity";
}

VolumeKind parse_volume_kind(std::string_view name) {
  for (auto k : {VolumeKind::intensity, VolumeKind::probability, VolumeKind::binary_mask,
                 VolumeKind::integer_labels}) {
    if (to_string(k) == name) return k;
  }
  throw InputError(fmt::format("unknown volume kind '{}'", name));
}

Grid::Grid(std::array<std::int64_t, 3> dims, std::array<double, 3> spacing)
    : dims_(dims), spacing_(spacing) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] <= 0) {
      throw InputError(fmt::format("grid dim[{}] = {} must be positive", a, dims_[a]));
    }
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
      throw InputError(
          fmt::format("grid spacing[{}] = {} must be positive and finite", a, spacing_[a]));
    }
  }
  size_ = static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1]) *
          static_cast<std::size_t>(dims_[2]);
}

double Grid::voxel_volume_ml() const noexcept {
  return spacing_[0] * spacing_[1] * spacing_[2] / 1000.0;
}

Index3 Grid::index(std::size_t linear) const noexcept {
  const auto l = static_cast<std::int64_t>(linear);
  const std::int64_t x = l % dims_[0];
  const std::int64_t y = (l / dims_[0]) % dims_[1];
  const std::int64_t z = l / (dims_[0] * dims_[1]);
  return {x, y, z};
}

void require_congruent(const Grid& a, const Grid& b, std::string_view context) {
  if (a.dims() != b.dims()) {
    throw InputError(fmt::format("{}: grid dims differ ({}x{}x{} vs {}x{}x{})", context, a.nx(),
                                 a.ny(), a.nz(), b.nx(), b.ny(), b.nz()));
  }
  if (a.spacing() != b.spacing()) {
    throw InputError(fmt::format("{}: grid spacing differs ({},{},{} vs {},{},{})", context,
                                 a.spacing()[0], a.spacing()[1], a.spacing()[2], b.spacing()[0],
                                 b.spacing()[1], b.spacing()[2]));
  }
}

namespace {

void validate_domain(VolumeKind kind, std::span<const float> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float v = data[i];
    switch (kind) {
      case VolumeKind::intensity:
        break;
      case VolumeKind::probability:
        if (!(v >= 0.0f && v <= 1.0f)) {
          throw InputError(fmt::format("probability volume: voxel {} = {} outside [0,1]", i, v));
        }
        break;
      case VolumeKind::binary_mask:
        if (v != 0.0f && v != 1.0f) {
          throw InputError(fmt::format("binary mask: voxel {} = {} not in {{0,1}}", i, v));
        }
        break;
      case VolumeKind::integer_labels:
        if (!(v >= 0.0f) || std::floor(v) != v) {
          throw InputError(fmt::format("label volume: voxel {} = {} is not a label", i, v));
        }
        break;
    }
  }
}

}  // namespace

Volume::Volume(Grid grid, VolumeKind kind, std::vector<float> data)
    : grid_(std::move(grid)), kind_(kind), data_(std::move(data)) {
  if (grid_.size() == 0) throw InputError("volume has empty dims");
  if (data_.size() != grid_.size()) {
    throw InputError(fmt::format("volume data length {} does not match dims product {}",
                                 data_.size(), grid_.size()));
  }
  validate_domain(kind_, data_);
}

Volume Volume::zeros(Grid grid, VolumeKind kind) {
  const auto n = grid.size();
  return Volume(std::move(grid), kind, std::vector<float>(n, 0.0f));
}

Volume Volume::with_kind(VolumeKind kind) const {
  return Volume(grid_, kind, data_);
}

LabelVolume::LabelVolume(Grid grid, std::vector<std::int32_t> labels, std::int32_t label_count)
    : grid_(std::move(grid)), labels_(std::move(labels)), label_count_(label_count) {
  if (labels_.size() != grid_.size()) {
    throw InputError(fmt::format("label data length {} does not match dims product {}",
                                 labels_.size(), grid_.size()));
  }
}

Volume LabelVolume::to_volume() const {
  std::vector<float> data(labels_.begin(), labels_.end());
  return Volume(grid_, VolumeKind::integer_labels, std::move(data));
}

LabelVolume LabelVolume::from_volume(const Volume& v) {
  std::vector<std::int32_t> labels(v.size());
  std::int32_t max_label = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float f = v[i];
    if (!(f >= 0.0f) || std::floor(f) != f ||
        f > static_cast<float>(std::numeric_limits<std::int32_t>::max())) {
      throw InputError(fmt::format("label volume: voxel {} = {} is not a label", i, f));
    }
    labels[i] = static_cast<std::int32_t>(f);
    max_label = std::max(max_label, labels[i]);
  }
  return LabelVolume(v.grid(), std::move(labels), max_label);
}

VolumePair::VolumePair(Volume prediction_, Volume ground_truth_, std::string patient_id_)
    : prediction(std::move(prediction_)),
      ground_truth(std::move(ground_truth_)),
      patient_id(std::move(patient_id_)) {
  require_congruent(prediction.grid(), ground_truth.grid(), "patient '" + patient_id + "'");
}

Volume binarize(const Volume& probability, double threshold) {
  if (probability.kind() != VolumeKind::probability) {
    throw InputError(fmt::format("binarize expects a probability volume, got {}",
                                 to_string(probability.kind())));
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InputError(fmt::format("threshold {} outside [0,1]", threshold));
  }
  std::vector<float> out(probability.size());
  const auto in = probability.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(in[i]) > threshold ? 1.0f : 0.0f;
  }
  return Volume(probability.grid(), VolumeKind::binary_mask, std::move(out));
}

Volume to_binary_mask(const Volume& v) {
  std::vector<float> out(v.size());
  const auto in = v.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] != 0.0f ? 1.0f : 0.0f;
  return Volume(v.grid(), VolumeKind::binary_mask, std::move(out));
}

std::size_t count_foreground(const Volume& mask) {
  const auto d = mask.data();
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](float v) { return v != 0.0f; }));
}

}  // namespace lesioneval
