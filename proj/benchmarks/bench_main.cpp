#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "logsplit/bspline.hpp"
#include "logsplit/consensus.hpp"
#include "logsplit/logspline.hpp"
#include "logsplit/targets.hpp"

namespace {

using namespace logsplit;

std::vector<double> draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = draw_truncated(NormalTarget{2.0, 1.0}, {-0.5, 4.5}, rng);
  return v;
}

void BM_LocalBasis(benchmark::State& state) {
  const KnotSequence t =
      KnotSequence::uniform({0.0, 1.0}, static_cast<std::size_t>(state.range(0)), 4);
  double x = 0.0;
  for (auto _ : state) {
    x += 0.6180339887;
    if (x > 1.0) x -= 1.0;
    benchmark::DoNotOptimize(local_basis(t, x));
  }
}
BENCHMARK(BM_LocalBasis)->Arg(8)->Arg(64)->Arg(512);

void BM_Fit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Interval support{-0.5, 4.5};
  const SampleSet samples(draws(n, 1), support);
  const LogsplineModel model(choose_knots(n, support, 0.4, 1, 4));
  for (auto _ : state) benchmark::DoNotOptimize(fit(model, samples));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Fit)->Arg(2000)->Arg(11000)->Unit(benchmark::kMillisecond);

void BM_BuildInterpolant(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Interval support{-0.5, 4.5};
  const LogsplineModel model(choose_knots(n, support, 0.4, 1, 4));
  std::vector<LogsplineFit> fits;
  for (std::uint64_t m = 0; m < 3; ++m) fits.push_back(fit(model, SampleSet(draws(n, 10 + m), support)));
  const ProductEstimator product(fits);
  const InterpolationGrid grid = choose_grid(support, static_cast<double>(n), 0.5, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_interpolant(product, grid));
}
BENCHMARK(BM_BuildInterpolant)->Arg(2000)->Arg(11000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
