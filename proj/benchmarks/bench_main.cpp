#include "dbflow/circuit.hpp"
#include "dbflow/flow.hpp"
#include "dbflow/models.hpp"
#include "dbflow/randomized_pinching.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace dbf;

Hermitian tlfim(int sites) { return Hermitian::check(build_tlfim(sites, 2.0).to_operator()); }

void BM_DurationScanSetup(benchmark::State& state) {
  const Hermitian h = tlfim(static_cast<int>(state.range(0)));
  const AntiHermitian w = canonical_bracket(h);
  for (auto _ : state) benchmark::DoNotOptimize(DurationScan(h, w));
}
BENCHMARK(BM_DurationScanSetup)->DenseRange(3, 8)->Unit(benchmark::kMillisecond);

void BM_DurationScanEvaluate(benchmark::State& state) {
  const Hermitian h = tlfim(static_cast<int>(state.range(0)));
  const DurationScan scan(h, canonical_bracket(h));
  double s = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan.offdiag_norm(s));
    s = s < 1.0 ? s * 1.1 : 0.01;
  }
}
BENCHMARK(BM_DurationScanEvaluate)->DenseRange(3, 8)->Unit(benchmark::kMicrosecond);

void BM_OptimizeStepDuration(benchmark::State& state) {
  const Hermitian h = tlfim(static_cast<int>(state.range(0)));
  const StepSearchConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(optimize_step_duration(h, Canonical{}, cfg));
}
BENCHMARK(BM_OptimizeStepDuration)->DenseRange(3, 7)->Unit(benchmark::kMillisecond);

void BM_PinchingComponent(benchmark::State& state) {
  const int sites = static_cast<int>(state.range(0));
  const Hermitian h = tlfim(sites);
  const auto order = lexicographic_flips(sites);
  for (auto _ : state) benchmark::DoNotOptimize(pinching_component(h, 0.01, order));
}
BENCHMARK(BM_PinchingComponent)->DenseRange(2, 6)->Unit(benchmark::kMillisecond);

void BM_GroupCommutatorComponent(benchmark::State& state) {
  const Hermitian h = tlfim(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(group_commutator_component(h, 0.01));
}
BENCHMARK(BM_GroupCommutatorComponent)->DenseRange(2, 6)->Unit(benchmark::kMillisecond);

void BM_PauliDecompose(benchmark::State& state) {
  const int sites = static_cast<int>(state.range(0));
  const Operator a = build_tlfim(sites, 2.0).to_operator();
  for (auto _ : state) benchmark::DoNotOptimize(pauli_decompose(a, sites));
}
BENCHMARK(BM_PauliDecompose)->DenseRange(2, 7)->Unit(benchmark::kMillisecond);

void BM_ApproxPinch(benchmark::State& state) {
  const int sites = 6;
  const Operator j = build_tlfim(sites, 2.0).to_operator();
  const FlipSample flips = draw_flips(sites, static_cast<std::uint64_t>(state.range(0)), 1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(approx_pinch(j, flips));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ApproxPinch)->RangeMultiplier(10)->Range(10, 1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
