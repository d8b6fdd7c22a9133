// Serial reference vs OpenMP kernels, plus one whole ensemble run.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include <omp.h>

#include "mfcl/experiments.hpp"
#include "mfcl/kernels.hpp"

using namespace mfcl;

namespace {

std::vector<double> tanh_profile(std::size_t n) {
  const Grid1D g(6.0, n);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = -std::tanh(4.0 * g.node(i));
  return u;
}

template <auto Step>
void BM_viscous_step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FluxModel f = burgers_flux();
  const auto u = tanh_profile(n);
  std::vector<double> scratch(n - 1), out(n);
  for (auto _ : state) {
    Step(f, u, scratch, 0.1, 0.2, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Advance>
void BM_advance_particles(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Grid1D g(6.0, 1201);
  const auto m = tanh_profile(g.size());
  const kernels::DriftSlice slice{m, m, 0.5, -6.0, g.dx(), g.size()};
  const auto labels = seed_particles(6.0, n);
  const std::function<double(double)> a = [](double v) { return 0.5 * v; };
  std::vector<double> x = labels;
  for (auto _ : state) {
    Advance(x, slice, a, 1e-3, 1e-4);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ensemble(benchmark::State& state) {
  ExperimentConfig c = ExperimentConfig::desk_scale();
  c.n_mc = 8;
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const MeanFieldModel model(c, 0.5);
  const auto thetas = default_test_functions();
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(model, 0, c.n_mc, thetas));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.n_mc));
}

}  // namespace

BENCHMARK(BM_viscous_step<&kernels::serial::viscous_step>)->Name("viscous_step/serial")->Arg(1201)->Arg(100001);
BENCHMARK(BM_viscous_step<&kernels::viscous_step>)->Name("viscous_step/openmp")->Arg(1201)->Arg(100001);
BENCHMARK(BM_advance_particles<&kernels::serial::advance_particles>)
    ->Name("advance_particles/serial")
    ->Arg(4001)
    ->Arg(100001);
BENCHMARK(BM_advance_particles<&kernels::advance_particles>)->Name("advance_particles/openmp")->Arg(4001)->Arg(100001);
BENCHMARK(BM_ensemble)->Name("ensemble/threads")->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
