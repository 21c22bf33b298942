#include <benchmark/benchmark.h>

#include "ealab/approximant.hpp"
#include "ealab/goodlambda.hpp"
#include "ealab/operators.hpp"

using namespace ealab;

namespace {

const LipschitzGraph kFlat = LipschitzGraph::flat(1);

void BM_BuildForest(benchmark::State& state) {
  const auto f = builtin_field("harmonic_sinexp", 1);
  const int depth = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto forest = build_forest(f, kFlat, RootCube::unit(1), {0.1, 0.5, depth, depth + 2});
    red_blue_classify(forest);
    benchmark::DoNotOptimize(forest.selected_count());
  }
}
BENCHMARK(BM_BuildForest)->Arg(6)->Arg(7)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Approximant(benchmark::State& state) {
  const auto f = builtin_field("harmonic_sinexp", 1);
  auto forest = build_forest(f, kFlat, RootCube::unit(1), {0.1, 0.5, 8, 10});
  red_blue_classify(forest);
  for (auto _ : state) benchmark::DoNotOptimize(build_approximant(forest, f, kFlat).sup_error);
}
BENCHMARK(BM_Approximant)->Unit(benchmark::kMillisecond);

void BM_CarlesonDecomposition(benchmark::State& state) {
  const auto f = builtin_field("harmonic_sinexp", 1);
  auto forest = build_forest(f, kFlat, RootCube::unit(1), {0.1, 0.5, 7, 9});
  red_blue_classify(forest);
  const auto approx = build_approximant(forest, f, kFlat);
  const int samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto d = carleson_decomposition(approx, forest, kFlat, {.boundary_samples = samples});
    benchmark::DoNotOptimize(d.c3.constant);
  }
}
BENCHMARK(BM_CarlesonDecomposition)->Arg(65)->Arg(257)->Unit(benchmark::kMillisecond);

void BM_CountingFunction(benchmark::State& state) {
  const auto f = builtin_field("harmonic_sinexp", 1);
  const int depth = static_cast<int>(state.range(0));
  CountingParams p{.r = 1.0, .epsilon = 0.05, .beta = 0.7, .alpha = 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(counting_function(f, kFlat, Vec{0.5}, p, depth).count);
  state.SetComplexityN(std::int64_t{1} << (2 * depth));
}
BENCHMARK(BM_CountingFunction)->DenseRange(6, 9)->Complexity(benchmark::oNLogN)->Unit(benchmark::kMillisecond);

void BM_AreaFunction(benchmark::State& state) {
  const auto f = builtin_field("harmonic_sinexp", 1);
  for (auto _ : state) {
    auto a = area_function(f, kFlat, Vec{0.5}, {1.0, 0.0, 1.0}, {.depth = static_cast<int>(state.range(0))});
    benchmark::DoNotOptimize(a.value);
  }
}
BENCHMARK(BM_AreaFunction)->Arg(8)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_GoodLambdaDecay(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  DyadicFunction df;
  for (std::uint64_t s = 1;; ++s) {
    df = synth_martingale(depth, 0.25, s);
    if (check_hypothesis(df, 1.0, 0.25).holds) break;
  }
  for (auto _ : state) benchmark::DoNotOptimize(decay_check(df, 1.0, 4).holds);
}
BENCHMARK(BM_GoodLambdaDecay)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
