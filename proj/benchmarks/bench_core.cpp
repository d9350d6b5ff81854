#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "ctrlab/direct.hpp"
#include "ctrlab/endpoint.hpp"
#include "ctrlab/registry.hpp"

namespace {

using namespace ctrlab;

const char* const kSystems[] = {"lq-scalar", "double-integrator", "oscillator-potential",
                                "heisenberg", "martinet", "drifted-heisenberg"};

Control sample_control(const ProblemSpec& spec) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.5);
  Control u = spec.zero_control();
  for (int k = 0; k < u.intervals(); ++k) {
    for (int i = 0; i < u.channels(); ++i) u.values()(k, i) = g(rng);
  }
  return u;
}

void BM_Integrate(benchmark::State& state) {
  const ProblemSpec spec = make_benchmark(kSystems[state.range(0)]).spec.with_intervals(static_cast<int>(state.range(1)));
  const Control u = sample_control(spec);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(spec, u));
  state.SetLabel(kSystems[state.range(0)]);
}
BENCHMARK(BM_Integrate)->ArgsProduct({{0, 1, 2, 3, 4, 5}, {64, 256}});

void BM_DEndPoint(benchmark::State& state) {
  const ProblemSpec spec = make_benchmark(kSystems[state.range(0)]).spec.with_intervals(static_cast<int>(state.range(1)));
  const Control u = sample_control(spec);
  for (auto _ : state) benchmark::DoNotOptimize(d_end_point(spec, u));
  state.SetLabel(kSystems[state.range(0)]);
}
BENCHMARK(BM_DEndPoint)->ArgsProduct({{0, 3, 4}, {64, 256}});

void BM_LocalSolve(benchmark::State& state) {
  const Benchmark b = make_benchmark(kSystems[state.range(0)]);
  const Vector& x = b.sample_targets.front();
  const SolveOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(local_solve(b.spec, x, b.spec.zero_control(), opts));
  state.SetLabel(b.name);
}
BENCHMARK(BM_LocalSolve)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
