#include <benchmark/benchmark.h>

#include "mra/beltway.hpp"
#include "mra/model.hpp"
#include "mra/spectral.hpp"

namespace {

using namespace mra;

Signal gaussian(std::size_t L, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Signal v(L);
  for (double& x : v.values()) x = standard_normal(rng);
  return v;
}

void BM_Dft(benchmark::State& state) {
  const Signal v = gaussian(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(dft(v));
}
BENCHMARK(BM_Dft)->RangeMultiplier(4)->Range(16, 4096);

void BM_Rho(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const Signal a = gaussian(L, 2), b = gaussian(L, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rho(a, b, GroupKind::dihedral));
}
BENCHMARK(BM_Rho)->RangeMultiplier(4)->Range(16, 4096);

void BM_LogDensity(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const Signal theta = gaussian(L, 4), y = gaussian(L, 5);
  for (auto _ : state) benchmark::DoNotOptimize(log_density(theta, y.values(), 1.0));
}
BENCHMARK(BM_LogDensity)->RangeMultiplier(4)->Range(8, 1024);

void BM_EmStep(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(6);
  const Signal theta0 = gaussian(L, 7);
  const Dataset data = simulate(theta0, {L, 1.0}, 10000, rng);
  for (auto _ : state) benchmark::DoNotOptimize(em_step(data, theta0));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_EmStep)->Arg(8)->Arg(21)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Beltway(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(8);
  const auto support = random_collision_free_support(101, s, rng);
  const auto profile = DifferenceProfile::of_support(support, 101);
  for (auto _ : state) benchmark::DoNotOptimize(solve_beltway(profile, s));
}
BENCHMARK(BM_Beltway)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
