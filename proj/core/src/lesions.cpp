#include "lesioneval/lesions.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "lesioneval/error.hpp"
#include "lesioneval/format.hpp"

namespace lesioneval {

Connectivity connectivity_from_int(int value) {
  switch (value) {
    case 6: return Connectivity::six;
    case 18: return Connectivity::eighteen;
    case 26: return Connectivity::twenty_six;
    default: throw InputError(fmt::format("connectivity {} not in {{6, 18, 26}}", value));
  }
}

namespace {

struct Offset {
  int dx, dy, dz;
};

// Neighbours that precede the current voxel in scan order.
std::vector<Offset> backward_offsets(Connectivity conn) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 0; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (conn == Connectivity::six && manhattan > 1) continue;
        if (conn == Connectivity::eighteen && manhattan > 2) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

class DisjointSet {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller provisional label wins; roots are therefore the earliest label.
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }
  std::size_t size() const noexcept { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

LabelVolume connected_components(const Volume& mask, Connectivity conn) {
  if (mask.kind() != VolumeKind::binary_mask) {
    throw InputError(fmt::format("connected_components expects a binary mask, got {}",
                                 to_string(mask.kind())));
  }
  const Grid& g = mask.grid();
  const auto nx = g.nx(), ny = g.ny(), nz = g.nz();
  const auto offsets = backward_offsets(conn);
  const auto data = mask.data();

  // Provisional labels are 1-based; 0 is background.
  std::vector<std::uint32_t> provisional(g.size(), 0);
  DisjointSet sets;
  sets.make();  // slot 0 unused

  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        const std::size_t i = g.linear(x, y, z);
        if (data[i] == 0.0f) continue;
        std::uint32_t label = 0;
        for (const auto& o : offsets) {
          const auto xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
          if (!g.contains(xx, yy, zz)) continue;
          const std::uint32_t nb = provisional[g.linear(xx, yy, zz)];
          if (nb == 0) continue;
          if (label == 0) label = nb;
          else sets.unite(label, nb);
        }
        if (label == 0) label = sets.make();
        provisional[i] = label;
      }
    }
  }

  // Final labels follow first appearance of each root in scan order.
  std::vector<std::int32_t> final_of_root(sets.size(), 0);
  std::vector<std::int32_t> labels(g.size(), 0);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    if (provisional[i] == 0) continue;
    const auto root = sets.find(provisional[i]);
    if (final_of_root[root] == 0) final_of_root[root] = ++next;
    labels[i] = final_of_root[root];
  }
  return LabelVolume(g, std::move(labels), next);
}

std::vector<LesionInstance> extract_lesions(const LabelVolume& labels, std::int64_t min_voxels) {
  const Grid& g = labels.grid();
  const auto k = static_cast<std::size_t>(labels.label_count());
  std::vector<LesionInstance> all(k);
  std::vector<std::array<double, 3>> sums(k, {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto l = labels[i];
    if (l == 0) continue;
    if (l < 0 || static_cast<std::size_t>(l) > k) {
      throw InputError(fmt::format("label {} at voxel {} exceeds label count {}", l, i, k));
    }
    auto& inst = all[static_cast<std::size_t>(l - 1)];
    inst.voxels.push_back(i);
    const Index3 p = g.index(i);
    auto& s = sums[static_cast<std::size_t>(l - 1)];
    s[0] += static_cast<double>(p.x);
    s[1] += static_cast<double>(p.y);
    s[2] += static_cast<double>(p.z);
  }
  std::vector<LesionInstance> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    auto& inst = all[j];
    inst.voxel_count = static_cast<std::int64_t>(inst.voxels.size());
    if (inst.voxel_count == 0 || inst.voxel_count < min_voxels) continue;
    inst.id = static_cast<std::int32_t>(j + 1);
    inst.grid = g;
    inst.volume_ml = static_cast<double>(inst.voxel_count) * g.spacing()[0] * g.spacing()[1] *
                     g.spacing()[2] / 1000.0;
    const auto n = static_cast<double>(inst.voxel_count);
    inst.centroid = {sums[j][0] / n, sums[j][1] / n, sums[j][2] / n};
    out.push_back(std::move(inst));
  }
  std::sort(out.begin(), out.end(), [](const LesionInstance& a, const LesionInstance& b) {
    if (a.voxel_count != b.voxel_count) return a.voxel_count > b.voxel_count;
    return a.id < b.id;
  });
  return out;
}

std::vector<LesionInstance> filter_by_volume(const std::vector<LesionInstance>& lesions, double min_ml) {
  if (!(min_ml >= 0.0)) throw InputError(fmt::format("min_ml = {} must be nonnegative", min_ml));
  std::vector<LesionInstance> out;
  std::copy_if(lesions.begin(), lesions.end(), std::back_inserter(out),
               [min_ml](const LesionInstance& l) { return l.volume_ml > min_ml; });
  return out;
}

std::string lesions_to_csv(const std::vector<LesionInstance>& lesions) {
  std::string out = "id,voxel_count,volume_ml,centroid_x,centroid_y,centroid_z\n";
  for (const auto& l : lesions) {
    out += fmt::format("{},{},{},{},{},{}\n", l.id, l.voxel_count, format_number(l.volume_ml),
                       format_number(l.centroid[0]), format_number(l.centroid[1]),
                       format_number(l.centroid[2]));
  }
  return out;
}

}  // namespace lesioneval
