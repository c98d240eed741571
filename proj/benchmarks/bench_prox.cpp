#include <benchmark/benchmark.h>

#include "ot/prox.hpp"
#include "ot/testkit.hpp"

using namespace ot;

namespace {

GridDims cube(int n) { return GridDims::plane(n, n, n); }

void BM_prox_cell(benchmark::State& state) {
  // a fixed batch of scalar prox evaluations, positive and clamped branches mixed
  std::vector<double> mt(3000), ft(1000);
  testkit::fill_random(mt, 4);
  testkit::fill_random(ft, 5);
  double m[2];
  for (auto _ : state) {
    double acc = 0.0;
    for (int k = 0; k < 1000; ++k)
      acc += prox_j(&mt[2 * k], 2, ft[k], 1.0 / 75.0, m);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_prox_cell);

void BM_prox_field(benchmark::State& state) {
  const GridDims g = cube(static_cast<int>(state.range(0)));
  const CostModel cost = CostModel::uniform(g);
  CenteredField V0 = CenteredField::zeros(g);
  testkit::fill_random(V0, 6);
  for (auto _ : state) {
    CenteredField V = V0;
    prox_J(V, 1.0 / 75.0, cost);
    benchmark::DoNotOptimize(V.f.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.centered_size()));
}
BENCHMARK(BM_prox_field)->Arg(16)->Arg(32);

void BM_project_constraints(benchmark::State& state) {
  const GridDims g = cube(static_cast<int>(state.range(0)));
  ProxScratch scratch(g, PoissonBackend::dct);
  StaggeredField U0 = StaggeredField::zeros(g);
  testkit::fill_random(U0, 7);
  Array2 f0(g.nx(), g.ny(), 1.0), f1(g.nx(), g.ny(), 1.0);
  const BoundaryValues b0 = assemble_boundary_target(g, f0, f1);
  for (auto _ : state) {
    StaggeredField U = U0;
    project_constraints(U, b0, scratch);
    benchmark::DoNotOptimize(U.f.data());
  }
}
BENCHMARK(BM_project_constraints)->Arg(16)->Arg(32);

void BM_project_coupling(benchmark::State& state) {
  const GridDims g = cube(static_cast<int>(state.range(0)));
  ProxScratch scratch(g, PoissonBackend::dct);
  StaggeredField U = StaggeredField::zeros(g);
  CenteredField V = CenteredField::zeros(g);
  testkit::fill_random(U, 8);
  testkit::fill_random(V, 9);
  StaggeredField U_out;
  CenteredField V_out;
  for (auto _ : state) {
    project_coupling(U, V, scratch, U_out, V_out);
    benchmark::DoNotOptimize(U_out.f.data());
  }
}
BENCHMARK(BM_project_coupling)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
