#include <benchmark/benchmark.h>

#include <memory>

#include "ergograph/attractor.hpp"
#include "ergograph/ergodics.hpp"
#include "ergograph/invariant_graph.hpp"
#include "ergograph/rng.hpp"

using namespace ergograph;

namespace {

std::shared_ptr<const PlateauFamily> family() {
  static const auto f = std::make_shared<PlateauFamily>(FamilyConfig::defaults());
  return f;
}

void BM_FiberEval(benchmark::State& state) {
  const auto f = family();
  Rng rng(1);
  PlanePoint x{0.3, -0.2};
  for (auto _ : state) {
    x = f->eval(CircleAngle(rng.uniform()), x);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_FiberEval);

void BM_FiberJacobian(benchmark::State& state) {
  const auto f = family();
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(f->jacobian(CircleAngle(rng.uniform()), {0.3, -0.2}));
}
BENCHMARK(BM_FiberJacobian);

void BM_FiberInverse(benchmark::State& state) {
  const auto f = family();
  const PlanePoint y = f->eval(CircleAngle(0.3), {0.4, 0.1});
  for (auto _ : state) benchmark::DoNotOptimize(f->inverse(CircleAngle(0.3), y));
}
BENCHMARK(BM_FiberInverse);

void BM_HutchinsonStep(benchmark::State& state) {
  const auto f = family();
  const auto ifs = generator_ifs(f);
  const auto grid = GridGeometry::for_domain(f->domain(), static_cast<int>(state.range(0)));
  const auto k = GridSet::full_disk(grid, f->domain());
  for (auto _ : state) benchmark::DoNotOptimize(hutchinson_step(ifs, k));
}
BENCHMARK(BM_HutchinsonStep)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_PullbackGamma(benchmark::State& state) {
  const auto f = family();
  std::uint64_t i = 0;
  for (auto _ : state) {
    const auto s = sample_solenoid(i++, kDeepSolenoid, f->k());
    benchmark::DoNotOptimize(pullback_gamma(*f, s, 1e-9));
  }
}
BENCHMARK(BM_PullbackGamma)->Unit(benchmark::kMicrosecond);

void BM_LyapunovTop(benchmark::State& state) {
  const auto f = family();
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov_top(*f, {CircleAngle(0.1), {0.2, 0.2}}, 10000, 3));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_LyapunovTop)->Unit(benchmark::kMillisecond);

void BM_Wasserstein1(benchmark::State& state) {
  const auto f = family();
  const auto ifs = generator_ifs(f);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto mu = chaos_game(ifs, n, 100, 1, {0, 0});
  const auto nu = chaos_game(ifs, n, 100, 2, {1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein1_bounds(mu, nu));
}
BENCHMARK(BM_Wasserstein1)->Arg(256)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
