#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "magmove/diagnostics.hpp"
#include "magmove/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTerminated = 3;
constexpr int kExitDiagnostic = 4;

int thread_cap() {
  // the build is serial; the variable is honored by clamping
  const char* env = std::getenv("MAGMOVE_THREADS");
  if (!env) return 1;
  int v = std::atoi(env);
  return v < 1 ? 1 : 1;
}

int cmd_run(const std::string& config_path) {
  using namespace magmove;
  RunConfig cfg = load_config(config_path);
  for (const std::string& w : cfg.warnings) std::cerr << "warning: " << w << "\n";

  GridSpec g = make_grid_from(cfg);
  DataProviders data = make_data(cfg, g);
  TrajectoryStore traj = run_evolution(data, cfg.material, g, cfg.step);

  std::filesystem::create_directories(cfg.output_dir);
  export_series(traj, cfg.output_dir + "/series.csv");
  int stride = cfg.snapshot_stride;
  for (std::size_t k = 0; k < traj.snaps.size(); ++k) {
    bool last = (k + 1 == traj.snaps.size());
    if (stride > 0 && (k % stride == 0 || last))
      export_snapshot(traj.snaps[k], static_cast<int>(k), g, cfg.output_dir);
  }

  const Snapshot& fin = traj.snaps.back();
  std::cout << "steps=" << traj.snaps.size() - 1 << " t_end=" << fin.t
            << " status=" << to_string(fin.status)
            << " energy=" << fin.energy.total() << " min_det=" << fin.min_det
            << "\n";
  return fin.status == StepStatus::Accepted ? kExitOk : kExitTerminated;
}

int cmd_gradcheck(const std::string& config_path, std::uint64_t seed) {
  using namespace magmove;
  RunConfig cfg = load_config(config_path);
  GridSpec g = make_grid_from(cfg);
  DataProviders data = make_data(cfg, g);
  GradCheckReport rep = gradient_check(g, cfg.material, data, cfg.step, seed);
  std::cout << "energy_err=" << rep.energy_err
            << " dissipation_err=" << rep.dissipation_err
            << " functional_err=" << rep.functional_err << "\n";
  return rep.worst() <= 1e-6 ? kExitOk : kExitDiagnostic;
}

int cmd_check() {
  using namespace magmove;
  bool ok = true;
  auto report = [&](const char* name, bool pass) {
    std::cout << (pass ? "pass " : "FAIL ") << name << "\n";
    ok = ok && pass;
  };

  {  // stray-field energy identity and projection stability
    BackgroundGrid bg;
    bg.lat.d = 3;
    bg.lat.n = {24, 24, 24};
    bg.lat.lo = {0.0, 0.0, 0.0};
    bg.lat.h = {1.0 / 23, 1.0 / 23, 1.0 / 23};
    Field M = make_field(bg.lat, 3);
    for (long n = 0; n < bg.lat.nodes(); ++n) {
      double x[3];
      bg.lat.pos(bg.lat.unflat(n), x);
      double r2 = 0.0;
      for (int a = 0; a < 3; ++a) r2 += (x[a] - 0.5) * (x[a] - 0.5);
      if (r2 < 0.4 * 0.4) M.at(n)[2] = 1.0;
    }
    StrayFieldSolution sol = solve_stray_field(M, bg, 1.0);
    auto [lhs, rhs] = stray_energy_identity(M, sol, 1.0);
    double rel = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
    report("stray energy identity", rel <= 1e-8);
    report("stray stability", stability_check(M, sol) <= 1.0 + 1e-10);
  }

  {  // gradient consistency on the default small configuration
    GridSpec g = make_grid(3, 7);
    MaterialParams p;
    p.stray_field = true;
    DataProviders data;
    data.eta0 = identity_deformation(g);
    double m0[3] = {0.0, 0.0, 1.0};
    data.Mt0 = constant_field(g.lat, m0, 3);
    StepConfig cfg;
    cfg.stray_bg_nodes = 16;
    GradCheckReport rep = gradient_check(g, p, data, cfg, 42);
    report("gradient check", rep.worst() <= 1e-6);
  }

  {  // difference-quotient bound for a sinusoidal external field
    GridSpec g = make_grid(3, 7);
    RunConfig rc;
    rc.hext_preset = "sinusoid";
    rc.hext_amplitude = 0.5;
    rc.hext_omega = 3.0;
    rc.hext_wavevector = {2.0, 1.0, 0.0};
    DataProviders data = make_data(rc, g);
    DiffQuotientReport rep =
        hext_difference_quotient_check(*data.hext, g, 0.01, 50);
    report("external field difference quotients", rep.ok);
  }

  return ok ? kExitOk : kExitDiagnostic;
}

int cmd_refine(const std::string& config_path, int levels) {
  using namespace magmove;
  RunConfig cfg = load_config(config_path);
  GridSpec g = make_grid_from(cfg);
  DataProviders data = make_data(cfg, g);

  auto runner = [&](double dt) {
    StepConfig sc = cfg.step;
    sc.dt = dt;
    return run_evolution(data, cfg.material, g, sc);
  };
  RefinementReport rep = refinement_study(runner, cfg.step.dt, levels, g);
  for (std::size_t l = 0; l < rep.levels.size(); ++l)
    std::cout << "level=" << l << " dt=" << rep.levels[l].dt
              << " discrepancy=" << rep.levels[l].discrepancy
              << " holder_const=" << rep.levels[l].holder_const << "\n";
  for (std::size_t i = 0; i < rep.ratios.size(); ++i)
    std::cout << "ratio[" << i << "]=" << rep.ratios[i] << "\n";
  std::cout << "monotone=" << (rep.monotone ? "yes" : "no")
            << " holder_spread=" << rep.holder_spread << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  (void)thread_cap();
  CLI::App app{"quasi-static magnetoelastic evolution by minimizing movements"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int levels = 3;

  auto* run = app.add_subcommand("run", "run an evolution from a config");
  run->add_option("--config", config_path, "JSON config path")->required();

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc->add_option("--config", config_path, "JSON config path")->required();
  gc->add_option("--seed", seed, "state seed");

  auto* check = app.add_subcommand("check", "built-in self checks");

  auto* refine = app.add_subcommand("refine", "time-step refinement study");
  refine->add_option("--config", config_path, "JSON config path")->required();
  refine->add_option("--levels", levels, "number of halvings (>= 3)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (gc->parsed()) return cmd_gradcheck(config_path, seed);
    if (check->parsed()) return cmd_check();
    if (refine->parsed()) return cmd_refine(config_path, levels);
  } catch (const magmove::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const magmove::AdmissibilityError& e) {
    std::cerr << "terminated: " << e.what() << "\n";
    return kExitTerminated;
  } catch (const magmove::DiagnosticError& e) {
    std::cerr << "diagnostic failure: " << e.what() << "\n";
    return kExitDiagnostic;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
