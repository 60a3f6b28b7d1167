// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli/cli.hpp"
#include "cohort.hpp"
#include "lesioneval/analysis.hpp"
#include "lesioneval/intensity.hpp"
#include "lesioneval/lesions.hpp"
#include "lesioneval/metrics.hpp"
#include "lesioneval/phantom.hpp"
#include "lesioneval/stats.hpp"
#include "oracles.hpp"
#include "shapiro_cases.hpp"
#include "tempdir.hpp"

using namespace lesioneval;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kNsdTol = 1e-9;
constexpr double kExactPTol = 1e-12;
constexpr double kShapiroWTol = 1e-3;
constexpr double kLandmarkTol = 1e-6;
constexpr double kAffineRelTol = 1e-9;
constexpr double kRuntimeLimitS = 10.0;

// Collects failures for one criterion; the first few are printed.
struct Outcome {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, std::string what) {
    if (!ok) failures.push_back(std::move(what));
  }
};

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool bit_equal(const std::optional<double>& a, const std::optional<double>& b) {
  return a.has_value() == b.has_value() && (!a || bit_equal(*a, *b));
}

Volume sphere_union(const Grid& g, std::mt19937_64& rng) {
  std::vector<float> d(g.size(), 0.0f);
  std::uniform_int_distribution<int> count(1, 3);
  const int k = count(rng);
  for (int s = 0; s < k; ++s) {
    std::array<double, 3> c{};
    for (int a = 0; a < 3; ++a) c[a] = std::uniform_real_distribution<double>(0, static_cast<double>(g.dims()[a]))(rng);
    const double r = std::uniform_real_distribution<double>(1.0, 9.0)(rng);
    for (std::int64_t z = 0; z < g.dims()[2]; ++z)
      for (std::int64_t y = 0; y < g.dims()[1]; ++y)
        for (std::int64_t x = 0; x < g.dims()[0]; ++x) {
          const double dx = x - c[0], dy = y - c[1], dz = z - c[2];
          if (dx * dx + dy * dy + dz * dz <= r * r) d[g.linear(x, y, z)] = 1.0f;
        }
  }
  return Volume(g, VolumeKind::binary_mask, std::move(d));
}

Volume cube_at(const Grid& g, std::array<std::int64_t, 3> lo, std::int64_t side) {
  return oracle::box_mask(g, lo, {lo[0] + side, lo[1] + side, lo[2] + side});
}

// 1. Designed cohort through `eval`.
Outcome oracle_cohort() {
  Outcome o;
  oracle::TempDir tmp("accept-cohort");
  const auto t0 = std::chrono::steady_clock::now();
  const auto cohort = oracle::designed_cohort(10);
  const auto manifest = oracle::write_cohort(tmp / "cohort", cohort);
  const int rc = cli::run({"--output", (tmp / "out").string(), "eval", "--manifest", manifest.string()});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.expect(rc == 0, fmt::format("eval exit code {}", rc));
  o.expect(seconds < kRuntimeLimitS, fmt::format("runtime {:.2f} s", seconds));

  const auto per = detect_cohort(cohort, 0.5, DetectionConfig{});
  bool counts = per.size() == 10, sens = true, fppi = true;
  double f2 = per.empty() ? 0.0 : per[0].f2;
  bool f2_literal = true;
  for (const auto& m : per) {
    counts = counts && m.tp == 2 && m.fp == 2 && m.fn == 1;
    sens = sens && m.sensitivity && *m.sensitivity == 2.0 / 3.0;
    fppi = fppi && m.fppi == 2.0;
    f2_literal = f2_literal && m.f2 == 10.0 / 13.0;
  }
  o.expect(counts, "per-patient counts differ from tp=2 fp=2 fn=1");
  o.expect(sens, "sensitivity != 2/3");
  o.expect(fppi, "FPPI != 2");
  // 5TP/(5TP+4FN+FP) at tp=2, fp=2, fn=1 is 10/16; 10/13 is unreachable with these counts.
  o.expect(f2_literal, fmt::format("F2 = {} (5TP/(5TP+4FN+FP) = 10/16), required 10/13", f2));

  const auto text = oracle::slurp(tmp / "out" / "summary.txt");
  o.expect(text.find("sensitivity  0.67 (0.67–0.67)") != std::string::npos, "summary cell for sensitivity");
  o.note = fmt::format("{:.2f} s", seconds);
  return o;
}

// 2. NSD against the all-pairs oracle.
Outcome nsd_equivalence() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> dim(4, 32);
  std::uniform_real_distribution<double> tau(0.5, 4.0), sp(0.5, 2.5), dens(0.02, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    const bool mm = trial % 2 == 1;
    const Grid g({dim(rng), dim(rng), dim(rng)},
                 mm ? std::array<double, 3>{sp(rng), sp(rng), sp(rng)} : std::array<double, 3>{1, 1, 1});
    Volume p, q;
    if (trial % 4 < 2) {
      p = sphere_union(g, rng);
      q = sphere_union(g, rng);
    } else {
      p = oracle::random_mask(g, dens(rng), rng);
      q = oracle::random_mask(g, dens(rng), rng);
    }
    const double t = tau(rng);
    const double fast = nsd(p, q, mm ? Tolerance::mm(t) : Tolerance::voxels(t));
    const double slow = oracle::all_pairs_nsd(p, q, t, mm);
    o.expect(std::fabs(fast - slow) <= kNsdTol, fmt::format("trial {}: {} vs {}", trial, fast, slow));
  }
  const Grid g({20, 20, 20}, {1, 1, 1});
  const double shifted = nsd(cube_at(g, {5, 5, 5}, 6), cube_at(g, {6, 5, 5}, 6), Tolerance::voxels(2.0));
  o.expect(shifted == 1.0, fmt::format("shifted cube NSD {}", shifted));
  return o;
}

// 3. Connected components against BFS flood fill.
Outcome components_equivalence() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dens(0.05, 0.6);
  const Grid g({16, 16, 16}, {1, 1, 1});
  for (int conn : {6, 26}) {
    for (int trial = 0; trial < 200; ++trial) {
      const auto m = oracle::random_mask(g, dens(rng), rng);
      const auto fast = connected_components(m, connectivity_from_int(conn));
      const auto slow = oracle::flood_fill(m, conn);
      const auto k = slow.empty() ? 0 : *std::max_element(slow.begin(), slow.end());
      o.expect(oracle::same_partition(fast.labels(), slow) && fast.label_count() == k,
               fmt::format("connectivity {} trial {}", conn, trial));
    }
  }
  return o;
}

// 4. FROC limits and monotonicity.
Outcome froc_correctness() {
  Outcome o;
  PhantomSpec s;
  s.grid = Grid({64, 32, 32}, {1, 1, 1});
  s.gt_lesions = {{1, {12, 16, 16}, 8.5}, {2, {34, 16, 16}, 4.0}, {3, {52, 16, 16}, 8.0}};
  s.detected_ids = {1, 2, 3};
  const auto g = generate(s, "perfect");
  const std::vector<VolumePair> perfect = {
      VolumePair(g.ground_truth.with_kind(VolumeKind::probability), g.ground_truth, "perfect")};
  const auto thr = default_threshold_sweep();
  const auto all = froc(perfect, thr, 15.0, std::nullopt, DetectionConfig{});
  const auto large = froc(perfect, thr, 4.0, 1.0, DetectionConfig{});
  o.expect(all.auc == 15.0, fmt::format("all-lesion AUC {}", all.auc));
  o.expect(large.auc == 4.0, fmt::format("large-lesion AUC {}", large.auc));

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    // Noise-free background: with noise, lowering the threshold can merge noise
    // components and FP counts legitimately drop.
    RandomPhantomOptions ro;
    ro.boundary_jitter_voxels = static_cast<int>(seed % 3);
    const std::vector<VolumePair> one = {generate(random_phantom_spec(9000 + seed, ro), "r")};
    auto pts = froc(one, thr, 1e9, std::nullopt, DetectionConfig{}).points;
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.threshold > b.threshold; });
    for (std::size_t i = 1; i < pts.size(); ++i) {
      o.expect(pts[i].sensitivity >= pts[i - 1].sensitivity && pts[i].fppi >= pts[i - 1].fppi,
               fmt::format("seed {} at threshold {}", seed, pts[i].threshold));
    }
  }
  return o;
}

std::vector<double> distinct_magnitudes(std::size_t n, std::mt19937_64& rng, bool signs) {
  std::uniform_real_distribution<double> u(0.05, 5.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> v;
  while (v.size() < n) {
    double x = std::round(u(rng) * 1e4) / 1e4;
    if (std::any_of(v.begin(), v.end(), [&](double y) { return std::fabs(y) == x; })) continue;
    if (signs && coin(rng)) x = -x;
    v.push_back(x);
  }
  return v;
}

// 5. Exact rank tests and Shapiro–Wilk.
Outcome exact_statistics() {
  Outcome o;
  std::mt19937_64 rng(31);
  for (std::size_t n = 1; n <= 12; ++n) {
    for (int rep = 0; rep < 8; ++rep) {
      const auto d = distinct_magnitudes(n, rng, true);
      const auto r = wilcoxon_signed_rank(d);
      const double ref = oracle::enumerate_signed_rank_p(d);
      o.expect(r.method == PValueMethod::exact && std::fabs(r.p_value - ref) <= kExactPTol,
               fmt::format("signed-rank n={}: {} vs {}", n, r.p_value, ref));
    }
  }
  const std::vector<double> five = {0.4, 1.1, 2.0, 0.7, 3.3};
  o.expect(wilcoxon_signed_rank(five).p_value == 0.0625, "n=5 all-positive p");

  for (std::size_t total = 2; total <= 12; ++total) {
    for (std::size_t n1 = 1; n1 < total; ++n1) {
      const auto pool = distinct_magnitudes(total, rng, false);
      const std::vector<double> a(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n1));
      const std::vector<double> b(pool.begin() + static_cast<std::ptrdiff_t>(n1), pool.end());
      const auto r = mann_whitney_u(a, b);
      const double ref = oracle::enumerate_rank_sum_p(a, b);
      o.expect(r.method == PValueMethod::exact && std::fabs(r.p_value - ref) <= kExactPTol,
               fmt::format("rank-sum {}+{}: {} vs {}", n1, total - n1, r.p_value, ref));
    }
  }
  const std::vector<double> lo = {1, 2}, hi = {3, 4};
  const auto u0 = mann_whitney_u(lo, hi);
  o.expect(u0.statistic == 0.0 && std::fabs(u0.p_value - 1.0 / 3.0) <= kExactPTol, "U=0 case p");

  for (const auto& c : oracle::shapiro_cases()) {
    const auto r = shapiro_wilk(c.x);
    o.expect(std::fabs(r.statistic - c.w) <= kShapiroWTol, fmt::format("{}: W {} vs {}", c.name, r.statistic, c.w));
    o.expect((r.p_value < 0.05) == (c.p < 0.05), fmt::format("{}: p {} vs {}", c.name, r.p_value, c.p));
  }
  return o;
}

// 6. Landmark standardization.
Outcome standardization() {
  Outcome o;
  std::mt19937_64 rng(41);
  const LandmarkProfile ref{default_landmark_percentiles(), {10, 30, 55, 80, 120, 200}};
  for (int rep = 0; rep < 5; ++rep) {
    std::uniform_real_distribution<double> u(0.1 + rep, 50.0 + 100.0 * rep);
    std::vector<float> d(2401);
    for (auto& v : d) v = static_cast<float>(u(rng));
    const Volume vol(Grid({49, 49, 1}, {1, 1, 1}), VolumeKind::intensity, std::move(d));
    const auto got = extract_landmarks(standardize(vol, extract_landmarks(vol), ref));
    for (std::size_t i = 0; i < ref.landmarks.size(); ++i) {
      o.expect(std::fabs(got.landmarks[i] - ref.landmarks[i]) <= kLandmarkTol,
               fmt::format("rep {} landmark {}: {} vs {}", rep, i, got.landmarks[i], ref.landmarks[i]));
    }
  }
  const LandmarkProfile src{default_landmark_percentiles(), {1.5, 4, 9, 20, 33, 70}};
  LandmarkProfile affine = src;
  for (auto& l : affine.landmarks) l = 2.0 * l + 3.0;
  std::uniform_real_distribution<double> x(-50.0, 200.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = x(rng);
    const double got = map_intensity(v, src, affine);
    o.expect(std::fabs(got - (2.0 * v + 3.0)) <= kAffineRelTol * (1.0 + std::fabs(v)),
             fmt::format("affine map at {}: {}", v, got));
  }
  return o;
}

// 7. Thread-count independence of eval and froc outputs.
Outcome determinism() {
  Outcome o;
  oracle::TempDir tmp("accept-threads");
  std::vector<VolumePair> cohort;
  for (std::uint64_t i = 0; i < 8; ++i) {
    RandomPhantomOptions ro;
    ro.noise_level = 0.1;
    ro.boundary_jitter_voxels = 1;
    cohort.push_back(generate(random_phantom_spec(500 + i, ro), fmt::format("t{}", i)));
  }
  const auto manifest = oracle::write_cohort(tmp / "cohort", cohort);
  for (const char* cmd : {"eval", "froc"}) {
    const auto one = tmp / (std::string(cmd) + "-1"), eight = tmp / (std::string(cmd) + "-8");
    const int a = cli::run({"--threads", "1", "--output", one.string(), cmd, "--manifest", manifest.string()});
    const int b = cli::run({"--threads", "8", "--output", eight.string(), cmd, "--manifest", manifest.string()});
    o.expect(a == 0 && b == 0, fmt::format("{} exit codes {} {}", cmd, a, b));
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(one)) {
      const auto ext = e.path().extension();
      if (ext != ".csv" && ext != ".json") continue;
      ++compared;
      const auto other = eight / e.path().filename();
      o.expect(fs::exists(other) && oracle::slurp(e.path()) == oracle::slurp(other),
               fmt::format("{} {} differs", cmd, e.path().filename().string()));
    }
    o.expect(compared >= 2, fmt::format("{} wrote {} CSV/JSON files", cmd, compared));
  }
  return o;
}

// 8. Volume strata against hand enumeration.
Outcome volume_stratification() {
  Outcome o;
  // 1.25 mm voxels: 1/512 ml each. 8x8x4 = 0.5 ml, 16x8x8 = 2 ml, 16x16x16 = 8 ml.
  const Grid g({120, 20, 20}, {1.25, 1.25, 1.25});
  using Box = std::array<std::int64_t, 3>;
  const Box half{8, 8, 4}, two{16, 8, 8}, eight{16, 16, 16};
  struct Object {
    Box size;
    bool gt;
    bool detected;
  };
  auto build = [&](const std::vector<Object>& objects, std::string id) {
    std::vector<float> prob(g.size(), 0.0f), gt(g.size(), 0.0f);
    std::int64_t x0 = 1;
    for (const auto& ob : objects) {
      for (std::int64_t z = 1; z < 1 + ob.size[2]; ++z)
        for (std::int64_t y = 1; y < 1 + ob.size[1]; ++y)
          for (std::int64_t x = x0; x < x0 + ob.size[0]; ++x) {
            if (ob.gt) gt[g.linear(x, y, z)] = 1.0f;
            if (ob.detected) prob[g.linear(x, y, z)] = 0.9f;
          }
      x0 += ob.size[0] + 2;
    }
    return VolumePair(Volume(g, VolumeKind::probability, std::move(prob)),
                      Volume(g, VolumeKind::binary_mask, std::move(gt)), std::move(id));
  };
  const std::vector<VolumePair> cohort = {
      // GT 0.5, 2, 8 all found; one 2 ml FP.
      build({{half, true, true}, {two, true, true}, {eight, true, true}, {two, false, true}}, "a"),
      // GT 0.5 and 2 missed, 8 found; one 0.5 ml FP.
      build({{half, true, false}, {two, true, false}, {eight, true, true}, {half, false, true}}, "b"),
      // GT 2 found, 8 missed; FPs of 8 and 2 ml.
      build({{two, true, true}, {eight, true, false}, {eight, false, true}, {two, false, true}}, "c"),
  };
  const std::vector<double> grid = {0.0, 1.0};
  const auto s = volume_stratified(cohort, 0.5, grid, DetectionConfig{});
  if (s.size() != 2) {
    o.expect(false, fmt::format("{} strata", s.size()));
    return o;
  }
  // > 1 ml: GT {2, 8 | 2, 8 | 2, 8}, TP {2, 8 | 8 | 2}, FP {2 | - | 8, 2}.
  o.expect(s[1].gt_lesion_count == 6 && s[1].tp == 4 && s[1].fn == 2 && s[1].fp == 3,
           fmt::format("> 1 ml counts gt={} tp={} fn={} fp={}", s[1].gt_lesion_count, s[1].tp, s[1].fn, s[1].fp));
  o.expect(s[1].sensitivity && *s[1].sensitivity == 4.0 / 6.0, "> 1 ml sensitivity != 4/6");
  o.expect(s[1].fppi == 1.0, fmt::format("> 1 ml FPPI {}", s[1].fppi));

  const auto pooled = pool_detection(detect_cohort(cohort, 0.5, DetectionConfig{}));
  o.expect(s[0].tp == pooled.tp && s[0].fp == pooled.fp && s[0].fn == pooled.fn, "min_ml 0 counts");
  o.expect(bit_equal(s[0].sensitivity, pooled.sensitivity) && bit_equal(s[0].fppi, pooled.fppi),
           "min_ml 0 rates not bit-identical");
  o.expect(s[0].tp == 5 && s[0].fp == 4 && s[0].fn == 3, "min_ml 0 hand counts");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle cohort end-to-end", oracle_cohort},
      {"NSD brute-force equivalence", nsd_equivalence},
      {"connected-components equivalence", components_equivalence},
      {"FROC correctness", froc_correctness},
      {"exact statistics", exact_statistics},
      {"intensity standardization fixed point", standardization},
      {"determinism across thread counts", determinism},
      {"volume stratification", volume_stratification},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.failures.push_back(fmt::format("exception: {}", e.what()));
    }
    const bool ok = o.failures.empty();
    failed += ok ? 0 : 1;
    fmt::print("{} {} {}{}\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.note.empty() ? "" : " (" + o.note + ")");
    for (std::size_t k = 0; k < std::min<std::size_t>(o.failures.size(), 5); ++k) {
      fmt::print("     - {}\n", o.failures[k]);
    }
    if (o.failures.size() > 5) fmt::print("     - ... {} more\n", o.failures.size() - 5);
  }
  return failed == 0 ? 0 : 1;
}
