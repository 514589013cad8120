#include <benchmark/benchmark.h>

#include "nslab/charpoly.hpp"
#include "nslab/ensembles.hpp"
#include "nslab/growth.hpp"
#include "nslab/spectrum.hpp"
#include "nslab/transfer.hpp"

using namespace nslab;

namespace {

const Ensemble& two_point() {
  static const Ensemble e = Ensemble::iid(Distribution::point_masses({{0, 0.5}, {3, 0.5}}));
  return e;
}

Potential sample(std::int64_t n) { return realize(two_point(), {1, n}, 1, StreamTag::verify, 0); }

void BM_ScaledProductPush(benchmark::State& state) {
  const Potential pot = sample(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(window_product(pot, pot.window(), 0.1).log_norm());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScaledProductPush)->Arg(64)->Arg(512)->Arg(4096);

void BM_Charpoly(benchmark::State& state) {
  const Potential pot = sample(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(charpoly_window(pot, pot.window(), 0.1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Charpoly)->Arg(64)->Arg(512)->Arg(4096);

void BM_SturmEigenvalues(benchmark::State& state) {
  const Potential pot = sample(state.range(0));
  const TruncatedOperator op = TruncatedOperator::from(pot, pot.window());
  for (auto _ : state) benchmark::DoNotOptimize(eigenvalues(op));
}
BENCHMARK(BM_SturmEigenvalues)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Diagonalize(benchmark::State& state) {
  const Potential pot = sample(state.range(0));
  const TruncatedOperator op = TruncatedOperator::from(pot, pot.window());
  for (auto _ : state) benchmark::DoNotOptimize(diagonalize(op));
}
BENCHMARK(BM_Diagonalize)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_EstimateGrowth(benchmark::State& state) {
  const std::vector<Window> windows{{1, 64}, {1, 128}, {1, 256}};
  const std::vector<double> energies{-0.5, 0.0, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_growth(two_point(), windows, energies,
                                             {static_cast<std::size_t>(state.range(0)), 1, 1}));
  }
}
BENCHMARK(BM_EstimateGrowth)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
