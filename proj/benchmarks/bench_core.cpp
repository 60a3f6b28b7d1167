#include <benchmark/benchmark.h>

#include <random>

#include "lesioneval/analysis.hpp"
#include "lesioneval/lesions.hpp"
#include "lesioneval/metrics.hpp"
#include "lesioneval/phantom.hpp"
#include "lesioneval/stats.hpp"

using namespace lesioneval;

namespace {

VolumePair phantom(std::int64_t side, std::uint64_t seed) {
  RandomPhantomOptions o;
  o.dims = {side, side, side};
  o.max_lesions = 8;
  return generate(random_phantom_spec(seed, o), "bench");
}

void BM_ConnectedComponents(benchmark::State& state) {
  const auto pair = phantom(state.range(0), 1);
  const auto conn = state.range(1) == 6 ? Connectivity::six : Connectivity::twenty_six;
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(pair.ground_truth, conn));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pair.ground_truth.size()));
}
BENCHMARK(BM_ConnectedComponents)->Args({64, 6})->Args({64, 26})->Args({128, 26})->Unit(benchmark::kMillisecond);

void BM_Nsd(benchmark::State& state) {
  const auto pair = phantom(state.range(0), 2);
  const auto pred = binarize(pair.prediction, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(nsd(pred, pair.ground_truth, Tolerance::voxels(2.0)));
}
BENCHMARK(BM_Nsd)->Arg(32)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_DetectCohort(benchmark::State& state) {
  std::vector<VolumePair> cohort;
  for (std::uint64_t s = 0; s < 8; ++s) cohort.push_back(phantom(48, 10 + s));
  DetectionConfig c;
  c.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(detect_cohort(cohort, 0.5, c));
}
BENCHMARK(BM_DetectCohort)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

std::vector<double> distinct(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_WilcoxonExact(benchmark::State& state) {
  const auto d = distinct(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(wilcoxon_signed_rank(d));
}
BENCHMARK(BM_WilcoxonExact)->Arg(12)->Arg(25);

void BM_MannWhitneyExact(benchmark::State& state) {
  const auto a = distinct(10, 4), b = distinct(10, 5);
  for (auto _ : state) benchmark::DoNotOptimize(mann_whitney_u(a, b));
}
BENCHMARK(BM_MannWhitneyExact);

void BM_ShapiroWilk(benchmark::State& state) {
  const auto x = distinct(static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(shapiro_wilk(x));
}
BENCHMARK(BM_ShapiroWilk)->Arg(50)->Arg(1000);

}  // namespace

// The distro benchmark_main archive carries LTO bytecode from another gcc build.
BENCHMARK_MAIN();
