#include "dppml/datasets.hpp"
#include "dppml/random.hpp"
#include "dppml/sampling.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace dppml;

// Linear in n at fixed k and m.
void BM_EfficientDpp(benchmark::State& state) {
  const PointSet roll = generate_swiss_roll(state.range(0), 0.0, 1);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(efficient_dpp_sample(roll, {100, 20}, seed++));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EfficientDpp)->RangeMultiplier(2)->Range(5000, 80000)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);

void BM_EfficientDppCovariances(benchmark::State& state) {
  const PointSet roll = generate_swiss_roll(20000, 0.0, 1);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(efficient_dpp_sample(roll, {100, 30, Welsch{1.0}, CovarianceKind::Full}, seed++));
}
BENCHMARK(BM_EfficientDppCovariances)->Unit(benchmark::kMillisecond);

void BM_KMeansPlusPlusSeed(benchmark::State& state) {
  const PointSet roll = generate_swiss_roll(state.range(0), 0.0, 1);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(kmeanspp_seed(roll, 100, seed++));
}
BENCHMARK(BM_KMeansPlusPlusSeed)->Arg(10000)->Arg(40000)->Unit(benchmark::kMillisecond);

void BM_ExactDpp(benchmark::State& state) {
  const PointSet roll = generate_swiss_roll(state.range(0), 0.0, 1);
  Eigen::MatrixXd k(roll.size(), roll.size());
  for (Index i = 0; i < roll.size(); ++i)
    for (Index j = 0; j < roll.size(); ++j)
      k(i, j) = std::exp(-0.5 * (roll.coords.col(i) - roll.coords.col(j)).squaredNorm());
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(exact_dpp_sample(k, seed++));
}
BENCHMARK(BM_ExactDpp)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
