#include <benchmark/benchmark.h>

#include "smx/em_state.hpp"
#include "smx/integrators.hpp"
#include "smx/noise_field.hpp"

namespace {

// Benchmarks run on the reference 2/3 x 1/2 box; odd counts keep the box
// scheme solvable.
smx::GridSpec grid_for(const benchmark::State& state) {
  return smx::GridSpec::make(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1,
                             2.0 / 3.0, 0.5, 1.0);
}

smx::IncrementSampler sampler_for(const smx::GridSpec& g) {
  return smx::IncrementSampler(smx::NoiseStream(7, smx::SpectralBasis::make(g.lx, g.ly, 50, 50)), g);
}

void BM_SampleIncrement(benchmark::State& state) {
  const smx::GridSpec g = grid_for(state);
  const smx::IncrementSampler s = sampler_for(g);
  std::uint64_t n = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.sample_increment(0, n++, 1e-3));
  }
  state.SetItemsProcessed(state.iterations() * g.node_count());
}

void BM_Plan(benchmark::State& state, smx::SchemeId scheme) {
  const smx::GridSpec g = grid_for(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(smx::plan(scheme, g, 1e-3, smx::CouplingVector::tm(0.1, 0.1)));
  }
}

void BM_OneLayerStep(benchmark::State& state, smx::SchemeId scheme) {
  const smx::GridSpec g = grid_for(state);
  const smx::StepperPlan p = smx::plan(scheme, g, 1e-3, smx::CouplingVector::tm(0.1, 0.1));
  const smx::IncrementSampler s = sampler_for(g);
  const smx::IncrementField dW = s.sample_increment(0, 0, 1e-3);
  smx::FieldState z = smx::initial_condition_tm(g);
  for (auto _ : state) {
    z = smx::step_one_layer(p, z, dW);
    benchmark::DoNotOptimize(z);
  }
  state.SetItemsProcessed(state.iterations() * g.node_count());
}

void BM_LeapfrogStep(benchmark::State& state) {
  const smx::GridSpec g = grid_for(state);
  const smx::CouplingVector c = smx::CouplingVector::tm(0.1, 0.1);
  const smx::StepperPlan p3 = smx::plan(smx::SchemeId::method3, g, 1e-3, c);
  const smx::StepperPlan p2 = smx::plan(smx::SchemeId::method2, g, 1e-3, c);
  const smx::IncrementSampler s = sampler_for(g);
  const smx::IncrementField dW = s.sample_increment(0, 0, 1e-3);
  smx::TwoLayerState layers = smx::bootstrap_method2(p3, smx::initial_condition_tm(g), dW);
  for (auto _ : state) {
    smx::FieldState next = smx::step_method2(p2, layers, dW, dW);
    layers.prev = std::move(layers.curr);
    layers.curr = std::move(next);
    benchmark::DoNotOptimize(layers);
  }
  state.SetItemsProcessed(state.iterations() * g.node_count());
}

}  // namespace

BENCHMARK(BM_SampleIncrement)->Args({51, 39})->Args({101, 75});
BENCHMARK_CAPTURE(BM_Plan, method1, smx::SchemeId::method1)->Args({51, 39})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Plan, method3, smx::SchemeId::method3)->Args({51, 39})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_OneLayerStep, method1, smx::SchemeId::method1)->Args({51, 39})->Args({101, 75});
BENCHMARK_CAPTURE(BM_OneLayerStep, method3, smx::SchemeId::method3)->Args({51, 39})->Args({101, 75});
BENCHMARK(BM_LeapfrogStep)->Args({51, 39})->Args({101, 75});

BENCHMARK_MAIN();
