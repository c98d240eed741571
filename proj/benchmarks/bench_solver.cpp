#include <benchmark/benchmark.h>

#include "ot/solvers.hpp"
#include "ot/testkit.hpp"

using namespace ot;

namespace {

Problem blob_problem(int n) {
  const GridDims g = GridDims::plane(n, n, n);
  auto [f0, f1] = testkit::gaussian_pair(g, 0.1, 0.25, 0.25, 0.75, 0.75);
  validate_and_normalize(f0, f1, 1e-10);
  return Problem::uniform(g, f0, f1);
}

void BM_pd_step(benchmark::State& state) {
  const Problem p = blob_problem(static_cast<int>(state.range(0)));
  SolverConfig cfg;
  cfg.algo = Algorithm::pd;
  PDSolver solver(p, cfg);
  for (auto _ : state) {
    solver.step();
    benchmark::DoNotOptimize(solver.U().f.data());
  }
}
BENCHMARK(BM_pd_step)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_dr_step(benchmark::State& state) {
  const Problem p = blob_problem(static_cast<int>(state.range(0)));
  SolverConfig cfg;
  cfg.algo = Algorithm::a_dr;
  DRSolver solver(p, cfg);
  for (auto _ : state) {
    solver.step();
    benchmark::DoNotOptimize(solver.primary().U->f.data());
  }
}
BENCHMARK(BM_dr_step)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_four_block_step(benchmark::State& state) {
  const Problem p = blob_problem(static_cast<int>(state.range(0)));
  SolverConfig cfg;
  cfg.algo = Algorithm::s_dr;
  DRSolver solver(p, cfg);
  for (auto _ : state) {
    solver.step();
    benchmark::DoNotOptimize(solver.primary().U->f.data());
  }
}
BENCHMARK(BM_four_block_step)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
