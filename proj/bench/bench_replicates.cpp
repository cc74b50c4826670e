// Replicate loop: OpenMP-parallel against the serial reference.

#include <benchmark/benchmark.h>

#include "scmc/engine.hpp"

namespace {

scmc::RunConfig bench_config(scmc::Scheme scheme, int redundancy) {
  scmc::RunConfig c;
  c.scheme = scheme;
  c.workers = 40;
  c.redundancy = redundancy;
  c.target_globals = 100;
  c.replicates = 8;
  return c;
}

void args(benchmark::internal::Benchmark* b) {
  b->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
}

scmc::Simulation make(int which) {
  switch (which) {
    case 0: return scmc::Simulation(bench_config(scmc::Scheme::plain, 1));
    case 1: return scmc::Simulation(bench_config(scmc::Scheme::grouped, 4));
    default: return scmc::Simulation(bench_config(scmc::Scheme::coded, 4));
  }
}

void BM_ReplicatesSerial(benchmark::State& state) {
  const auto sim = make(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sim.run_replicates_serial());
}
BENCHMARK(BM_ReplicatesSerial)->Apply(args);

void BM_ReplicatesParallel(benchmark::State& state) {
  const auto sim = make(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sim.run_replicates());
}
BENCHMARK(BM_ReplicatesParallel)->Apply(args);

}  // namespace

BENCHMARK_MAIN();
