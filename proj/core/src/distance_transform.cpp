#include "lesioneval/distance_transform.hpp"

#include <cmath>
#include <limits>

namespace lesioneval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// In-place 1D squared distance transform of `f` (length n, stride) with step w.
void envelope_1d(double* f, std::size_t n, std::size_t stride, double w, std::vector<double>& scratch_f,
                 std::vector<std::size_t>& v, std::vector<double>& z) {
  scratch_f.resize(n);
  v.resize(n);
  z.resize(n + 1);
  std::size_t finite = 0;
  for (std::size_t q = 0; q < n; ++q) {
    scratch_f[q] = f[q * stride];
    if (scratch_f[q] < kInf) ++finite;
  }
  if (finite == 0) return;

  const double w2 = w * w;
  std::size_t k = 0;
  bool started = false;
  for (std::size_t q = 0; q < n; ++q) {
    if (!(scratch_f[q] < kInf)) continue;
    if (!started) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      started = true;
      continue;
    }
    const auto qd = static_cast<double>(q);
    // z[0] is -inf, so the scan stops at k == 0 at the latest.
    double s = 0.0;
    while (true) {
      const auto vd = static_cast<double>(v[k]);
      s = ((scratch_f[q] + w2 * qd * qd) - (scratch_f[v[k]] + w2 * vd * vd)) / (2.0 * w2 * (qd - vd));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }

  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const auto qd = static_cast<double>(q);
    while (z[k + 1] < qd) ++k;
    const double d = w * (qd - static_cast<double>(v[k]));
    f[q * stride] = d * d + scratch_f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_distance_to_set(const Grid& grid, std::span<const std::size_t> seeds,
                                            std::array<double, 3> weights) {
  std::vector<double> dist(grid.size(), kInf);
  for (auto s : seeds) dist[s] = 0.0;
  if (seeds.empty()) return dist;

  const auto nx = static_cast<std::size_t>(grid.nx());
  const auto ny = static_cast<std::size_t>(grid.ny());
  const auto nz = static_cast<std::size_t>(grid.nz());
  std::vector<double> scratch;
  std::vector<std::size_t> v;
  std::vector<double> z;

  for (std::size_t iz = 0; iz < nz; ++iz) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      envelope_1d(dist.data() + nx * (iy + ny * iz), nx, 1, weights[0], scratch, v, z);
    }
  }
  for (std::size_t iz = 0; iz < nz; ++iz) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      envelope_1d(dist.data() + ix + nx * ny * iz, ny, nx, weights[1], scratch, v, z);
    }
  }
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      envelope_1d(dist.data() + ix + nx * iy, nz, nx * ny, weights[2], scratch, v, z);
    }
  }
  return dist;
}

}  // namespace lesioneval
