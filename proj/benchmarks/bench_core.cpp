#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "menshov/approximants.hpp"
#include "menshov/blocks.hpp"
#include "menshov/circle.hpp"
#include "menshov/numbertheory.hpp"
#include "menshov/riesz.hpp"
#include "menshov/targets.hpp"
#include "menshov/trigpoly.hpp"

using namespace menshov;

namespace {

TrigPoly random_poly(std::int64_t degree, std::size_t terms, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> kd(-degree, degree);
  std::normal_distribution<double> cd;
  TrigPoly::Map m;
  while (m.size() < terms) m[kd(rng)] = Complex(cd(rng), cd(rng));
  return TrigPoly(std::move(m));
}

void BM_Evaluate(benchmark::State& state) {
  const auto terms = static_cast<std::size_t>(state.range(0));
  const auto P = random_poly(4000, terms, 1);
  const CircleGrid grid(std::size_t{1} << 14);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(P, grid));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Evaluate)->RangeMultiplier(4)->Range(16, 4096)->Unit(benchmark::kMicrosecond);

void BM_SStarStar(benchmark::State& state) {
  const auto P = random_poly(2000, static_cast<std::size_t>(state.range(0)), 2);
  const CircleGrid grid(std::size_t{1} << 13);
  for (auto _ : state) benchmark::DoNotOptimize(s_star_star(P, grid));
}
BENCHMARK(BM_SStarStar)->Arg(64)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_SpecialProduct(benchmark::State& state) {
  const auto P = random_poly(20, 30, 3);
  auto Q = random_poly(200, static_cast<std::size_t>(state.range(0)), 4);
  Q = Q - TrigPoly{{0, Q.coeff(0)}};
  for (auto _ : state) benchmark::DoNotOptimize(special_product(P, Q, 2 * P.degree() + 1));
}
BENCHMARK(BM_SpecialProduct)->Arg(16)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_L0Norm(benchmark::State& state) {
  const CircleGrid grid(static_cast<std::size_t>(state.range(0)));
  const auto f = make_target("sawtooth", nlohmann::json::object(), grid);
  for (auto _ : state) benchmark::DoNotOptimize(l0_norm(f));
}
BENCHMARK(BM_L0Norm)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMicrosecond);

void BM_BlockB(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(block_B(s, 3));
}
BENCHMARK(BM_BlockB)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);

void BM_HadamardBuilder(benchmark::State& state) {
  const RealSequence eps = [](std::int64_t n) { return 0.5 * std::pow(static_cast<double>(n), -4.0); };
  for (auto _ : state) benchmark::DoNotOptimize(build_hadamard_spectrum(eps, state.range(0)));
}
BENCHMARK(BM_HadamardBuilder)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_RieszPhases(benchmark::State& state) {
  const auto sched = make_schedule(static_cast<std::size_t>(state.range(0)));
  RieszSampling sampling;
  sampling.points = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(riesz_phases(sched, sched.size(), sampling));
}
BENCHMARK(BM_RieszPhases)->Arg(40)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_AnalyticUnit(benchmark::State& state) {
  const double eps = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(analytic_unit(eps));
}
BENCHMARK(BM_AnalyticUnit)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_NonresidueRun(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(find_nonresidue_run(r));
}
BENCHMARK(BM_NonresidueRun)->DenseRange(2, 8, 2)->Unit(benchmark::kMicrosecond);

}  // namespace

// The packaged benchmark_main archive is LTO bytecode from another compiler release.
BENCHMARK_MAIN();
