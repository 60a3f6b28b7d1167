#include "lesioneval/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/error.hpp"

namespace lesioneval {

namespace {

double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<std::int64_t>(rng() % span);
}

struct Ellipsoid {
  std::array<double, 3> center;
  std::array<double, 3> radii;  // voxel units per axis

  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    const double dx = (static_cast<double>(x) - center[0]) / radii[0];
    const double dy = (static_cast<double>(y) - center[1]) / radii[1];
    const double dz = (static_cast<double>(z) - center[2]) / radii[2];
    return dx * dx + dy * dy + dz * dz <= 1.0;
  }
};

Ellipsoid voxel_ellipsoid(const Grid& g, const std::array<double, 3>& center, double radius_mm, double grow = 0.0) {
  return {center, {radius_mm / g.spacing()[0] + grow, radius_mm / g.spacing()[1] + grow,
                   radius_mm / g.spacing()[2] + grow}};
}

void require_in_bounds(const Grid& g, const Ellipsoid& e, const std::string& what) {
  for (int a = 0; a < 3; ++a) {
    if (e.center[a] - e.radii[a] < 0.0 || e.center[a] + e.radii[a] > static_cast<double>(g.dims()[a] - 1)) {
      throw InputError(fmt::format("{} extends outside the volume along axis {}", what, a));
    }
  }
}

template <typename Fn>
void for_each_voxel(const Grid& g, const Ellipsoid& e, Fn&& fn) {
  std::array<std::int64_t, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(e.center[a] - e.radii[a])));
    hi[a] = std::min<std::int64_t>(g.dims()[a] - 1, static_cast<std::int64_t>(std::ceil(e.center[a] + e.radii[a])));
  }
  for (auto z = lo[2]; z <= hi[2]; ++z) {
    for (auto y = lo[1]; y <= hi[1]; ++y) {
      for (auto x = lo[0]; x <= hi[0]; ++x) {
        if (e.contains(x, y, z)) fn(g.linear(x, y, z));
      }
    }
  }
}

void validate_spec(const PhantomSpec& s) {
  if (s.grid.size() == 0) throw InputError("phantom: grid has empty dims");
  if (!(s.noise_level >= 0.0 && s.noise_level < 1.0)) {
    throw InputError(fmt::format("phantom: noise_level {} outside [0, 1)", s.noise_level));
  }
  if (s.boundary_jitter_voxels < 0) throw InputError("phantom: boundary_jitter_voxels must be >= 0");
  if (!(s.detected_peak_prob >= 0.9 && s.detected_peak_prob <= 1.0)) {
    throw InputError(fmt::format("phantom: detected_peak_prob {} outside [0.9, 1]", s.detected_peak_prob));
  }
  std::unordered_set<std::int32_t> ids;
  for (const auto& l : s.gt_lesions) {
    if (!(l.radius_mm > 0.0)) throw InputError(fmt::format("phantom: lesion {} radius must be positive", l.id));
    if (!ids.insert(l.id).second) throw InputError(fmt::format("phantom: duplicate lesion id {}", l.id));
  }
  std::unordered_set<std::int32_t> detected;
  for (auto id : s.detected_ids) {
    if (!ids.contains(id)) throw InputError(fmt::format("phantom: detected id {} is not a ground-truth id", id));
    if (!detected.insert(id).second) throw InputError(fmt::format("phantom: detected id {} listed twice", id));
  }
  for (std::size_t i = 0; i < s.fp_blobs.size(); ++i) {
    const auto& b = s.fp_blobs[i];
    if (!(b.radius_mm > 0.0)) throw InputError(fmt::format("phantom: fp blob {} radius must be positive", i));
    if (!(b.peak_prob > 0.0 && b.peak_prob <= 1.0)) {
      throw InputError(fmt::format("phantom: fp blob {} peak_prob {} outside (0, 1]", i, b.peak_prob));
    }
  }
}

}  // namespace

DesignedCounts designed_counts(const PhantomSpec& spec, double threshold) {
  validate_spec(spec);
  if (threshold < spec.noise_level) {
    throw InputError(fmt::format("designed counts need threshold >= noise_level ({} < {})", threshold,
                                 spec.noise_level));
  }
  DesignedCounts c;
  c.threshold = threshold;
  c.tp = spec.detected_peak_prob > threshold ? static_cast<std::int64_t>(spec.detected_ids.size()) : 0;
  c.fn = static_cast<std::int64_t>(spec.gt_lesions.size()) - c.tp;
  c.fp = std::count_if(spec.fp_blobs.begin(), spec.fp_blobs.end(),
                       [&](const PhantomBlob& b) { return b.peak_prob > threshold; });
  return c;
}

VolumePair generate(const PhantomSpec& spec, std::string patient_id) {
  validate_spec(spec);
  const Grid& g = spec.grid;
  std::mt19937_64 rng(spec.seed);
  const int jitter = spec.boundary_jitter_voxels;

  // Object groups: one per GT lesion (lesion plus its jitter envelope) and
  // one per FP blob. Groups must not overlap or come within the separation.
  const std::size_t n_groups = spec.gt_lesions.size() + spec.fp_blobs.size();
  std::vector<std::int32_t> owner(g.size(), -1);
  auto claim = [&](const Ellipsoid& e, std::int32_t group, const std::string& what) {
    for_each_voxel(g, e, [&](std::size_t i) {
      if (owner[i] == -1) {
        owner[i] = group;
      } else if (owner[i] != group) {
        throw InputError(fmt::format("phantom: {} overlaps another object", what));
      }
    });
  };

  std::unordered_set<std::int32_t> detected(spec.detected_ids.begin(), spec.detected_ids.end());
  std::vector<float> gt(g.size(), 0.0f);
  std::vector<float> prob(g.size(), 0.0f);

  for (std::size_t k = 0; k < spec.gt_lesions.size(); ++k) {
    const auto& l = spec.gt_lesions[k];
    const std::string what = fmt::format("lesion {}", l.id);
    const auto e = voxel_ellipsoid(g, l.center, l.radius_mm);
    require_in_bounds(g, e, what);
    std::size_t count = 0;
    for_each_voxel(g, e, [&](std::size_t i) {
      gt[i] = 1.0f;
      ++count;
    });
    if (count == 0) throw InputError(fmt::format("phantom: {} covers no voxel centre", what));
    const bool is_detected = detected.contains(l.id);
    const auto envelope = voxel_ellipsoid(g, l.center, l.radius_mm, is_detected ? jitter : 0);
    require_in_bounds(g, envelope, what);
    claim(envelope, static_cast<std::int32_t>(k), what);
  }
  for (std::size_t b = 0; b < spec.fp_blobs.size(); ++b) {
    const auto& blob = spec.fp_blobs[b];
    const std::string what = fmt::format("fp blob {}", b);
    const auto e = voxel_ellipsoid(g, blob.center, blob.radius_mm);
    require_in_bounds(g, e, what);
    claim(e, static_cast<std::int32_t>(spec.gt_lesions.size() + b), what);
    std::size_t count = 0;
    for_each_voxel(g, e, [&](std::size_t i) {
      prob[i] = static_cast<float>(blob.peak_prob);
      ++count;
    });
    if (count == 0) throw InputError(fmt::format("phantom: {} covers no voxel centre", what));
  }

  constexpr int sep = kPhantomSeparationVoxels;
  if (n_groups > 1) {
    for (std::int64_t z = 0; z < g.nz(); ++z) {
      for (std::int64_t y = 0; y < g.ny(); ++y) {
        for (std::int64_t x = 0; x < g.nx(); ++x) {
          const auto o = owner[g.linear(x, y, z)];
          if (o < 0) continue;
          for (int dz = -sep; dz <= sep; ++dz) {
            for (int dy = -sep; dy <= sep; ++dy) {
              for (int dx = -sep; dx <= sep; ++dx) {
                if (!g.contains(x + dx, y + dy, z + dz)) continue;
                const auto other = owner[g.linear(x + dx, y + dy, z + dz)];
                if (other >= 0 && other != o) {
                  throw InputError(fmt::format(
                      "phantom: objects {} and {} are closer than {} background voxels", o, other, sep));
                }
              }
            }
          }
        }
      }
    }
  }

  for (auto id : spec.detected_ids) {
    const auto it = std::find_if(spec.gt_lesions.begin(), spec.gt_lesions.end(),
                                 [id](const PhantomLesion& l) { return l.id == id; });
    auto e = voxel_ellipsoid(g, it->center, it->radius_mm);
    for (int a = 0; a < 3; ++a) {
      const auto delta = jitter > 0 ? uniform_int(rng, -jitter, jitter) : 0;
      e.radii[a] = std::max(0.5, e.radii[a] + static_cast<double>(delta));
    }
    bool overlaps = false;
    for_each_voxel(g, e, [&](std::size_t i) {
      prob[i] = static_cast<float>(spec.detected_peak_prob);
      overlaps = overlaps || gt[i] != 0.0f;
    });
    if (!overlaps) throw InputError(fmt::format("phantom: jittered blob of lesion {} misses the lesion", id));
  }

  if (spec.noise_level > 0.0) {
    for (auto& p : prob) {
      const auto noise = static_cast<float>(unit_double(rng) * spec.noise_level);
      p = std::max(p, noise);
    }
  }

  return VolumePair(Volume(g, VolumeKind::probability, std::move(prob)),
                    Volume(g, VolumeKind::binary_mask, std::move(gt)), std::move(patient_id));
}

PhantomSpec random_phantom_spec(std::uint64_t seed, const RandomPhantomOptions& o) {
  if (o.min_lesions < 0 || o.max_lesions < o.min_lesions) throw InputError("random phantom: bad lesion count range");
  if (!(o.min_radius_mm > 0.0) || o.max_radius_mm < o.min_radius_mm) {
    throw InputError("random phantom: bad radius range");
  }
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  PhantomSpec s;
  s.grid = Grid(o.dims, o.spacing);
  s.seed = seed;
  s.noise_level = o.noise_level;
  s.boundary_jitter_voxels = o.boundary_jitter_voxels;

  struct Placed {
    std::array<double, 3> c;
    double reach;
  };
  std::vector<Placed> placed;
  const double min_spacing = std::min({o.spacing[0], o.spacing[1], o.spacing[2]});
  // Enclosing-ball test in voxel units; a Euclidean gap > 4 leaves at least
  // kPhantomSeparationVoxels background voxels on every lattice line.
  auto try_place = [&](double radius_mm, double grow, std::array<double, 3>& center) {
    const double reach = radius_mm / min_spacing + grow;
    for (int attempt = 0; attempt < 200; ++attempt) {
      bool fits = true;
      for (int a = 0; a < 3; ++a) {
        const double r_axis = radius_mm / o.spacing[a] + grow;
        const auto lo = static_cast<std::int64_t>(std::ceil(r_axis));
        const auto hi = o.dims[a] - 1 - lo;
        if (hi < lo) return false;
        center[a] = static_cast<double>(uniform_int(rng, lo, hi));
      }
      for (const auto& p : placed) {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) d2 += (center[a] - p.c[a]) * (center[a] - p.c[a]);
        if (std::sqrt(d2) <= reach + p.reach + 4.0) {
          fits = false;
          break;
        }
      }
      if (fits) {
        placed.push_back({center, reach});
        return true;
      }
    }
    return false;
  };
  auto random_radius = [&] { return o.min_radius_mm + unit_double(rng) * (o.max_radius_mm - o.min_radius_mm); };

  const auto n_lesions = uniform_int(rng, o.min_lesions, o.max_lesions);
  for (std::int64_t k = 0; k < n_lesions; ++k) {
    PhantomLesion l;
    l.id = static_cast<std::int32_t>(s.gt_lesions.size() + 1);
    l.radius_mm = random_radius();
    const bool detect = unit_double(rng) < o.detect_probability;
    if (!try_place(l.radius_mm, detect ? o.boundary_jitter_voxels : 0, l.center)) continue;
    s.gt_lesions.push_back(l);
    if (detect) s.detected_ids.push_back(l.id);
  }
  const auto n_fp = uniform_int(rng, 0, o.max_fp_blobs);
  for (std::int64_t k = 0; k < n_fp; ++k) {
    PhantomBlob b;
    b.radius_mm = random_radius();
    b.peak_prob = o.min_fp_peak + unit_double(rng) * (o.max_fp_peak - o.min_fp_peak);
    if (!try_place(b.radius_mm, 0, b.center)) continue;
    s.fp_blobs.push_back(b);
  }
  return s;
}

void to_json(nlohmann::json& j, const PhantomSpec& s) {
  nlohmann::json lesions = nlohmann::json::array();
  for (const auto& l : s.gt_lesions) {
    lesions.push_back({{"id", l.id}, {"center", l.center}, {"radius_mm", l.radius_mm}});
  }
  nlohmann::json blobs = nlohmann::json::array();
  for (const auto& b : s.fp_blobs) {
    blobs.push_back({{"center", b.center}, {"radius_mm", b.radius_mm}, {"peak_prob", b.peak_prob}});
  }
  j = nlohmann::json{{"dims", s.grid.dims()},
                     {"spacing", s.grid.spacing()},
                     {"seed", s.seed},
                     {"gt_lesions", lesions},
                     {"detected_ids", s.detected_ids},
                     {"fp_blobs", blobs},
                     {"noise_level", s.noise_level},
                     {"boundary_jitter_voxels", s.boundary_jitter_voxels},
                     {"detected_peak_prob", s.detected_peak_prob}};
}

void from_json(const nlohmann::json& j, PhantomSpec& s) {
  try {
    s.grid = Grid(j.at("dims").get<std::array<std::int64_t, 3>>(),
                  j.value("spacing", std::array<double, 3>{1.0, 1.0, 1.0}));
    s.seed = j.value("seed", std::uint64_t{0});
    s.gt_lesions.clear();
    for (const auto& jl : j.value("gt_lesions", nlohmann::json::array())) {
      PhantomLesion l;
      l.id = jl.value("id", static_cast<std::int32_t>(s.gt_lesions.size() + 1));
      l.center = jl.at("center").get<std::array<double, 3>>();
      l.radius_mm = jl.at("radius_mm").get<double>();
      s.gt_lesions.push_back(l);
    }
    s.detected_ids = j.value("detected_ids", std::vector<std::int32_t>{});
    s.fp_blobs.clear();
    for (const auto& jb : j.value("fp_blobs", nlohmann::json::array())) {
      PhantomBlob b;
      b.center = jb.at("center").get<std::array<double, 3>>();
      b.radius_mm = jb.at("radius_mm").get<double>();
      b.peak_prob = jb.value("peak_prob", 0.8);
      s.fp_blobs.push_back(b);
    }
    s.noise_level = j.value("noise_level", 0.0);
    s.boundary_jitter_voxels = j.value("boundary_jitter_voxels", 0);
    s.detected_peak_prob = j.value("detected_peak_prob", 0.95);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("phantom spec: {}", e.what()));
  }
}

nlohmann::json expected_counts_json(const PhantomSpec& spec, const VolumePair& generated) {
  const auto counts = designed_counts(spec, std::max(0.5, spec.noise_level));
  const Grid& g = spec.grid;
  nlohmann::json lesions = nlohmann::json::array();
  for (const auto& l : spec.gt_lesions) {
    std::int64_t n = 0;
    for_each_voxel(g, voxel_ellipsoid(g, l.center, l.radius_mm), [&](std::size_t i) {
      n += generated.ground_truth[i] != 0.0f;
    });
    lesions.push_back({{"id", l.id},
                       {"voxel_count", n},
                       {"volume_ml", static_cast<double>(n) * g.voxel_volume_ml()},
                       {"detected", std::find(spec.detected_ids.begin(), spec.detected_ids.end(), l.id) !=
                                        spec.detected_ids.end()}});
  }
  nlohmann::json blobs = nlohmann::json::array();
  for (const auto& b : spec.fp_blobs) {
    std::int64_t n = 0;
    for_each_voxel(g, voxel_ellipsoid(g, b.center, b.radius_mm), [&](std::size_t) { ++n; });
    blobs.push_back({{"peak_prob", b.peak_prob},
                     {"voxel_count", n},
                     {"volume_ml", static_cast<double>(n) * g.voxel_volume_ml()}});
  }
  return nlohmann::json{{"threshold", counts.threshold}, {"tp", counts.tp},     {"fp", counts.fp},
                        {"fn", counts.fn},               {"gt_lesions", lesions}, {"fp_blobs", blobs},
                        {"patient_id", generated.patient_id}};
}

}  // namespace lesioneval
