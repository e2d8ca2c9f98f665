#include <benchmark/benchmark.h>

#include "magmove/diagnostics.hpp"
#include "magmove/ops.hpp"
#include "magmove/stepper.hpp"

using namespace magmove;

namespace {

void BM_energy_value_and_grad(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GridSpec g = make_grid(3, n);
  Field eta, Mt;
  random_smooth_state(g, 1, eta, Mt);
  MaterialParams p;
  EnergyModel model(g, p);
  Field gE = make_field(g.lat, 3), gM = make_field(g.lat, 3);
  for (auto _ : state) {
    EnergyBreakdown bd = model.value_and_grad(eta, Mt, gE, gM);
    benchmark::DoNotOptimize(bd);
  }
  state.SetItemsProcessed(state.iterations() * g.nodes());
}

void BM_stray_solve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  BackgroundGrid bg;
  bg.lat.d = 3;
  bg.lat.n = {n, n, n};
  bg.lat.lo = {0.0, 0.0, 0.0};
  double h = 1.0 / (n - 1);
  bg.lat.h = {h, h, h};
  Field M = make_field(bg.lat, 3);
  for (long q = 0; q < bg.lat.nodes(); ++q) {
    double x[3];
    bg.lat.pos(bg.lat.unflat(q), x);
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) r2 += (x[a] - 0.5) * (x[a] - 0.5);
    if (r2 < 0.35 * 0.35) M.at(q)[2] = 1.0;
  }
  for (auto _ : state) {
    StrayFieldSolution sol = solve_stray_field(M, bg, 1.0);
    benchmark::DoNotOptimize(sol.field_energy);
  }
}

void BM_dissipation_grad(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GridSpec g = make_grid(3, n);
  Field eta, Mt;
  random_smooth_state(g, 2, eta, Mt);
  KinematicState ref = build_kinematics(eta, g);
  MaterialParams p;
  RatePair r;
  random_smooth_direction(g, 3, r.deta, r.dMt);
  Field gd = make_field(g.lat, 3), gm = make_field(g.lat, 3);
  for (auto _ : state) {
    grad_dissipation(ref, r, g, p, gd, gm);
    benchmark::DoNotOptimize(gd.v.data());
  }
}

void BM_minimize_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GridSpec g = make_grid(3, n);
  MaterialParams p;
  DataProviders data;
  data.eta0 = make_field(g.lat, 3);
  for (long q = 0; q < g.nodes(); ++q) {
    double x[3];
    g.lat.pos(g.lat.unflat(q), x);
    for (int a = 0; a < 3; ++a)
      data.eta0.at(q)[a] = g.is_dirichlet(q) ? x[a] : 0.97 * x[a];
  }
  double m[3] = {0.0, 0.0, 1.0};
  data.Mt0 = constant_field(g.lat, m, 3);
  StepConfig cfg;
  cfg.dt = 1e-2;
  for (auto _ : state) {
    IncrementalFunctional F(g, p, data, data.eta0, data.Mt0, 1, cfg);
    StepResult r = minimize_step(F, cfg);
    benchmark::DoNotOptimize(r.iterations);
  }
}

}  // namespace

BENCHMARK(BM_energy_value_and_grad)->Arg(9)->Arg(17)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stray_solve)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dissipation_grad)->Arg(9)->Arg(17)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_minimize_step)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
