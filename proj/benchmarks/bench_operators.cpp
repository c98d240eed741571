#include <benchmark/benchmark.h>

#include "ot/operators.hpp"
#include "ot/testkit.hpp"

using namespace ot;

namespace {

GridDims cube(int n) { return GridDims::plane(n, n, n); }

void BM_interpolate(benchmark::State& state) {
  const GridDims g = cube(static_cast<int>(state.range(0)));
  StaggeredField U = StaggeredField::zeros(g);
  testkit::fill_random(U, 1);
  for (auto _ : state) {
    CenteredField V = interpolate(U);
    benchmark::DoNotOptimize(V.f.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.centered_size()));
}
BENCHMARK(BM_interpolate)->Arg(16)->Arg(32)->Arg(64);

void BM_interpolate_adjoint(benchmark::State& state) {
  const GridDims g = cube(static_cast<int>(state.range(0)));
  CenteredField V = CenteredField::zeros(g);
  testkit::fill_random(V, 2);
  for (auto _ : state) {
    StaggeredField U = interpolate_adjoint(V);
    benchmark::DoNotOptimize(U.f.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.centered_size()));
}
BENCHMARK(BM_interpolate_adjoint)->Arg(16)->Arg(32)->Arg(64);

void BM_divergence(benchmark::State& state) {
  const GridDims g = cube(static_cast<int>(state.range(0)));
  StaggeredField U = StaggeredField::zeros(g);
  testkit::fill_random(U, 3);
  for (auto _ : state) {
    Array3 r = divergence(U);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.centered_size()));
}
BENCHMARK(BM_divergence)->Arg(16)->Arg(32)->Arg(64);

void BM_op_norm(benchmark::State& state) {
  const GridDims g = cube(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_op_norm(g, OpTag::interpolation));
  }
}
BENCHMARK(BM_op_norm)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
