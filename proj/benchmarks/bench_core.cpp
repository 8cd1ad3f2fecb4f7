#include <benchmark/benchmark.h>

#include <trapscape/trapscape.hpp>

using namespace trapscape;

namespace {

const PairedCrystal& paired() {
  static const PairedCrystal p = [] {
    const TrapModel m = canonical_model(0.0, 120.0);
    return paired_crystal(m, ratio_for_separation(m, 30 * units::um));
  }();
  return p;
}

}  // namespace

static void BM_FindNodes(benchmark::State& st) {
  const TrapModel m = canonical_model(0.9);
  for (auto _ : st) benchmark::DoNotOptimize(find_nodes(m));
}
BENCHMARK(BM_FindNodes);

static void BM_PseudopotentialGrid(benchmark::State& st) {
  const TrapModel m = canonical_model(0.9);
  GridSpec g;
  for (auto _ : st) benchmark::DoNotOptimize(pseudopotential_grid(m, g, 1));
}
BENCHMARK(BM_PseudopotentialGrid)->Unit(benchmark::kMillisecond);

static void BM_PairedCrystal14(benchmark::State& st) {
  const TrapModel m = canonical_model(0.0, 120.0);
  const double r = ratio_for_separation(m, 30 * units::um);
  for (auto _ : st) benchmark::DoNotOptimize(paired_crystal(m, r));
}
BENCHMARK(BM_PairedCrystal14)->Unit(benchmark::kMillisecond);

static void BM_NormalModes14(benchmark::State& st) {
  const auto& p = paired();
  for (auto _ : st) benchmark::DoNotOptimize(normal_modes(p.model, p.state));
}
BENCHMARK(BM_NormalModes14);

static void BM_CorrugationParameter(benchmark::State& st) {
  const auto& p = paired();
  for (auto _ : st) benchmark::DoNotOptimize(corrugation_parameter(p.model, p.state, 0));
}
BENCHMARK(BM_CorrugationParameter);

BENCHMARK_MAIN();
