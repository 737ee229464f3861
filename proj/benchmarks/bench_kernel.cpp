#include "dppml/datasets.hpp"
#include "dppml/metric_kernel.hpp"
#include "dppml/nystrom.hpp"
#include "dppml/sampling.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace dppml;

void BM_KernelCross(benchmark::State& state) {
  const PointSet roll = generate_swiss_roll(state.range(0), 0.0, 2);
  const std::vector<Index> j = uniform_sample(roll.size(), state.range(1), 3).indices;
  const std::vector<Index> rest = complement(j, roll.size());
  for (auto _ : state) benchmark::DoNotOptimize(kernel_cross(roll, j, rest, {1.0}));
  state.SetItemsProcessed(state.iterations() * state.range(1) * static_cast<std::int64_t>(rest.size()));
}
BENCHMARK(BM_KernelCross)->Args({10000, 100})->Args({10000, 500})->Args({40000, 100})->Unit(benchmark::kMillisecond);

// GEMM path for wide points.
void BM_KernelCrossHighDim(benchmark::State& state) {
  PointSet p;
  p.coords = Eigen::MatrixXd::Random(784, 5000);
  const std::vector<Index> j = uniform_sample(5000, 500, 3).indices;
  const std::vector<Index> rest = complement(j, 5000);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_cross(p, j, rest, {5.0}));
}
BENCHMARK(BM_KernelCrossHighDim)->Unit(benchmark::kMillisecond);

void BM_ReconstructionError(benchmark::State& state) {
  const PointSet roll = generate_swiss_roll(state.range(0), 0.0, 2);
  const std::vector<Index> j = uniform_sample(roll.size(), 100, 3).indices;
  for (auto _ : state) benchmark::DoNotOptimize(reconstruction_error(roll, {1.0}, j));
}
BENCHMARK(BM_ReconstructionError)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_GeodesicDistances(benchmark::State& state) {
  const PointSet roll = generate_swiss_roll(state.range(0), 0.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(geodesic_distances(roll, 10));
}
BENCHMARK(BM_GeodesicDistances)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
