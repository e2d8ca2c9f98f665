// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magmove/diagnostics.hpp"
#include "magmove/io.hpp"
#include "magmove/ops.hpp"

using namespace magmove;

namespace {

int g_failures = 0;

void run_gate(int num, const char* name,
              const std::function<std::string(bool*)>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string note;
  try {
    note = fn(&ok);
  } catch (const std::exception& e) {
    ok = false;
    note = std::string("exception: ") + e.what();
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %2d %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", num, name,
              note.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

Field pinned_affine(const GridSpec& g, double lambda, double shear = 0.0) {
  Field eta = make_field(g.lat, 3);
  for (long n = 0; n < g.nodes(); ++n) {
    double x[3];
    g.lat.pos(g.lat.unflat(n), x);
    eta.at(n)[0] = lambda * x[0] + shear * x[2];
    eta.at(n)[1] = lambda * x[1];
    eta.at(n)[2] = lambda * x[2];
    if (g.is_dirichlet(n))
      for (int a = 0; a < 3; ++a) eta.at(n)[a] = x[a];
  }
  return eta;
}

DataProviders relaxation_data(const GridSpec& g, double lambda) {
  DataProviders data;
  data.eta0 = pinned_affine(g, lambda);
  double m[3] = {0.2, 0.0, 1.0};
  data.Mt0 = constant_field(g.lat, m, 3);
  return data;
}

// ---- criterion 1: gradient consistency over seeds, stray field enabled ----
std::string c1(bool* ok) {
  GridSpec g = make_grid(3, 9);
  MaterialParams p;
  p.stray_field = true;
  DataProviders data;
  data.eta0 = identity_deformation(g);
  double m[3] = {0.0, 0.0, 1.0};
  data.Mt0 = constant_field(g.lat, m, 3);
  StepConfig cfg;
  cfg.stray_bg_nodes = 16;
  double worst = 0.0;
  auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GradCheckReport rep = gradient_check(g, p, data, cfg, seed);
    worst = std::max(worst, rep.worst());
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  *ok = worst <= 1e-6 && secs <= 60.0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst rel err %.2e <= 1e-6 over 10 seeds", worst);
  return buf;
}

// ---- criterion 2: stray-field operator properties at production size ----
std::string c2(bool* ok) {
  auto t0 = std::chrono::steady_clock::now();
  BackgroundGrid bg;
  bg.lat.d = 3;
  bg.lat.n = {64, 64, 64};
  bg.lat.lo = {0.0, 0.0, 0.0};
  bg.lat.h = {1.0 / 63, 1.0 / 63, 1.0 / 63};
  Field M = make_field(bg.lat, 3);
  const double R = 0.35;
  for (long n = 0; n < bg.lat.nodes(); ++n) {
    double x[3];
    bg.lat.pos(bg.lat.unflat(n), x);
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) r2 += (x[a] - 0.5) * (x[a] - 0.5);
    if (r2 < R * R) M.at(n)[2] = 1.0;
  }
  StrayFieldSolution sol = solve_stray_field(M, bg, 1.0, 3.0);
  double rms = 0.0;
  long cnt = 0;
  for (long n = 0; n < bg.lat.nodes(); ++n) {
    double x[3];
    bg.lat.pos(bg.lat.unflat(n), x);
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) r2 += (x[a] - 0.5) * (x[a] - 0.5);
    if (r2 > 0.2 * 0.2) continue;
    const double* H = sol.H_at(n);
    rms += H[0] * H[0] + H[1] * H[1] + (H[2] + 1.0 / 3.0) * (H[2] + 1.0 / 3.0);
    ++cnt;
  }
  rms = std::sqrt(rms / cnt) / (1.0 / 3.0);
  auto [lhs, rhs] = stray_energy_identity(M, sol, 1.0);
  double ident = std::abs(lhs - rhs) / rhs;

  // linearity and self-adjointness on random interior magnetizations
  BackgroundGrid bs;
  bs.lat.d = 3;
  bs.lat.n = {32, 32, 32};
  bs.lat.lo = {0.0, 0.0, 0.0};
  bs.lat.h = {1.0 / 31, 1.0 / 31, 1.0 / 31};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rnd = [&] {
    Field F = make_field(bs.lat, 3);
    for (long n = 0; n < bs.lat.nodes(); ++n) {
      auto ix = bs.lat.unflat(n);
      bool inner = true;
      for (int a = 0; a < 3; ++a) inner = inner && ix[a] > 1 && ix[a] < 30;
      if (inner)
        for (int a = 0; a < 3; ++a) F.at(n)[a] = u(rng);
    }
    return F;
  };
  Field M1 = rnd(), M2 = rnd(), Ms = M1;
  for (std::size_t i = 0; i < Ms.v.size(); ++i) Ms.v[i] += M2.v[i];
  StrayFieldSolution s1 = solve_stray_field(M1, bs, 1.0);
  StrayFieldSolution s2 = solve_stray_field(M2, bs, 1.0);
  StrayFieldSolution ss = solve_stray_field(Ms, bs, 1.0);
  double lin = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < ss.H.v.size(); ++i) {
    lin = std::max(lin, std::abs(ss.H.v[i] - s1.H.v[i] - s2.H.v[i]));
    scale = std::max(scale, std::abs(ss.H.v[i]));
  }
  lin /= scale;
  double a12 = 0.0, a21 = 0.0, an = 0.0;
  for (long n = 0; n < bs.lat.nodes(); ++n)
    for (int c = 0; c < 3; ++c) {
      a12 += M1.at(n)[c] * s2.H_at(n)[c];
      a21 += M2.at(n)[c] * s1.H_at(n)[c];
      an += std::abs(M1.at(n)[c] * s2.H_at(n)[c]);
    }
  double adj = std::abs(a12 - a21) / an;
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  *ok = rms <= 0.05 && ident <= 1e-8 && lin <= 1e-10 && adj <= 1e-10 &&
        secs <= 120.0;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "ball RMS %.3f <= 0.05, identity %.1e, lin %.1e, adj %.1e", rms,
                ident, lin, adj);
  return buf;
}

// shared 50-step data-free relaxation used by criteria 3 and 4
struct RelaxRun {
  GridSpec g = make_grid(3, 9);
  MaterialParams p;
  DataProviders data;
  StepConfig cfg;
  TrajectoryStore traj;
  RelaxRun() {
    data = relaxation_data(g, 0.95);
    cfg.dt = 1e-2;
    cfg.t_end = 0.5;
    cfg.grad_tol = 1e-8;
    cfg.max_iters = 2000;
    traj = run_evolution(data, p, g, cfg);
  }
};
RelaxRun* g_relax = nullptr;

// ---- criterion 3: per-step descent of the incremental functional ----
std::string c3(bool* ok) {
  g_relax = new RelaxRun;
  const auto& R = *g_relax;
  if (R.traj.snaps.size() != 51) {
    *ok = false;
    return "run terminated early (" + std::to_string(R.traj.snaps.size() - 1) +
           " steps)";
  }
  double worst = -1e300;
  for (std::size_t k = 1; k < R.traj.snaps.size(); ++k) {
    IncrementalFunctional F(R.g, R.p, R.data, R.traj.snaps[k - 1].eta,
                            R.traj.snaps[k - 1].Mt, static_cast<int>(k), R.cfg);
    double f_base = F.value(R.traj.snaps[k - 1].eta, R.traj.snaps[k - 1].Mt);
    double f_min = F.value(R.traj.snaps[k].eta, R.traj.snaps[k].Mt);
    worst = std::max(worst, f_min - f_base - 1e-10 * std::abs(f_base));
  }
  *ok = worst <= 0.0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "max descent violation %.2e <= 0 over 50 steps",
                worst);
  return buf;
}

// ---- criterion 4: energy budget and a-priori envelope ----
std::string c4(bool* ok) {
  const auto& R = *g_relax;
  BudgetReport free_rep =
      energy_budget_report(R.traj, R.p, R.g, 0.0, 0.0, false);

  GridSpec g = make_grid(3, 7);
  RunConfig rc;
  rc.n = 7;
  rc.force_preset = "constant";
  rc.force_vector = {0.0, 0.2, -0.4};
  DataProviders data = make_data(rc, g);
  StepConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.2;
  TrajectoryStore forced = run_evolution(data, rc.material, g, cfg);
  BudgetReport forced_rep = energy_budget_report(
      forced, rc.material, g, data.force->sup_norm(), 0.0, false);

  *ok = free_rep.ok && free_rep.energy_monotone && free_rep.under_envelope &&
        forced_rep.ok && forced_rep.under_envelope &&
        forced.snaps.back().status == StepStatus::Accepted;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "free run monotone=%d, forced run under envelope %.3f -> %.3f",
                free_rep.energy_monotone ? 1 : 0,
                forced_rep.rows.back().lhs, forced_rep.envelope);
  return buf;
}

// ---- criterion 5: reference vs current-configuration energy quadrature ----
std::string c5(bool* ok) {
  MaterialParams p;
  double m[3] = {0.3, 0.1, 0.8};
  auto diff = [&](int n) {
    GridSpec g = make_grid(3, n);
    Field eta = make_field(g.lat, 3);
    for (long q = 0; q < g.nodes(); ++q) {
      double x[3];
      g.lat.pos(g.lat.unflat(q), x);
      eta.at(q)[0] = 2.0 * x[0] + 0.37 * x[2];
      eta.at(q)[1] = 2.0 * x[1] + 0.21 * x[0];
      eta.at(q)[2] = 2.0 * x[2];
    }
    Field Mt = constant_field(g.lat, m, 3);
    double lag = total_energy(eta, Mt, g, p).total();
    double eul = eulerian_energy(eta, Mt, g, p, 2 * (n - 1) + 1);
    return std::array<double, 2>{lag, std::abs(lag - eul)};
  };
  auto [lag_c, coarse] = diff(9);
  auto [lag_f, fine] = diff(17);
  double ratio = coarse / fine;
  *ok = std::isfinite(lag_c) && lag_c > 0.0 && std::isfinite(lag_f) &&
        coarse > 0.0 && fine > 0.0 && ratio >= 3.5 && ratio <= 4.5;
  char buf[128];
  std::snprintf(buf, sizeof buf, "|E_lag - E_eul| %.2e -> %.2e, ratio %.2f in [3.5,4.5]",
                coarse, fine, ratio);
  return buf;
}

// ---- criterion 6: eulerian transport dictionary ----
std::string c6(bool* ok) {
  GridSpec g = make_grid(3, 9);
  Field eta = make_field(g.lat, 3);
  for (long n = 0; n < g.nodes(); ++n) {
    double x[3];
    g.lat.pos(g.lat.unflat(n), x);
    eta.at(n)[0] = 2.0 * x[0] + 0.1 * x[2];
    eta.at(n)[1] = 2.0 * x[1];
    eta.at(n)[2] = 2.0 * x[2];
  }
  KinematicState st = build_kinematics(eta, g);
  double m[3] = {0.3, -0.2, 0.9};
  Field Mt = constant_field(g.lat, m, 3);
  BackgroundGrid bg = make_background_grid(eta, 3, 41, 0.1);
  EulerianField M = push_forward_magnetization(Mt, eta, st, g, bg);
  Field back = pull_back_magnetization(M.f, bg, eta, st, g);
  double rt = 0.0;
  for (long n = 0; n < g.nodes(); ++n) {
    double x[3];
    g.lat.pos(g.lat.unflat(n), x);
    double dist = 1.0;
    for (int a = 0; a < 3; ++a) dist = std::min({dist, x[a], 1.0 - x[a]});
    if (dist < 0.2) continue;  // zero extension dominates near the boundary
    for (int a = 0; a < 3; ++a)
      rt = std::max(rt, std::abs(back.at(n)[a] - m[a]) / std::abs(m[a]));
  }

  GridSpec gm = make_grid(3, 17);
  Field etam = make_field(gm.lat, 3);
  for (long n = 0; n < gm.nodes(); ++n) {
    double x[3];
    gm.lat.pos(gm.lat.unflat(n), x);
    etam.at(n)[0] = 1.3 * x[0] + 0.2 * x[1];
    etam.at(n)[1] = 1.1 * x[1];
    etam.at(n)[2] = 1.4 * x[2];
  }
  KinematicState stm = build_kinematics(etam, gm);
  Field Mtm = constant_field(gm.lat, m, 3);
  BackgroundGrid bgm = make_background_grid(etam, 3, 49, 0.05);
  EulerianField Mm = push_forward_magnetization(Mtm, etam, stm, gm, bgm);
  double hv = bgm.cell_volume();
  double mass_err = 0.0;
  for (int a = 0; a < 3; ++a) {
    double lagm = 0.0, eulm = 0.0;
    for (long n = 0; n < gm.nodes(); ++n) lagm += gm.qw[n] * Mtm.at(n)[a];
    for (long n = 0; n < bgm.lat.nodes(); ++n) eulm += hv * Mm.f.at(n)[a];
    mass_err = std::max(mass_err, std::abs(eulm - lagm) / std::abs(lagm));
  }

  // rigid translation: the extended material derivative must vanish
  GridSpec gt = make_grid(3, 9);
  const double dt = 0.01, c[3] = {0.5, -0.3, 0.2};
  Field e0 = identity_deformation(gt), e1 = e0;
  for (long n = 0; n < gt.nodes(); ++n)
    for (int a = 0; a < 3; ++a) e1.at(n)[a] += dt * c[a];
  KinematicState st1 = build_kinematics(e1, gt);
  Field deta = make_field(gt.lat, 3);
  for (long n = 0; n < gt.nodes(); ++n)
    for (int a = 0; a < 3; ++a) deta.at(n)[a] = c[a];
  BackgroundGrid bgt = make_background_grid(e1, 3, 33, 0.1);
  EulerianField M0 = push_forward_magnetization(Mt, e0, build_kinematics(e0, gt), gt, bgt);
  EulerianField M1 = push_forward_magnetization(Mt, e1, st1, gt, bgt);
  EulerianField v = eulerian_velocity(e1, deta, st1, gt, bgt);
  Field D = material_derivative(M0.f, M1.f, v.f, dt, bgt);
  double h = bgt.lat.h[0];
  double transport = 0.0;
  for (long n = 0; n < bgt.lat.nodes(); ++n) {
    double x[3];
    bgt.lat.pos(bgt.lat.unflat(n), x);
    bool inner = true;  // stay clear of the coverage boundary
    for (int a = 0; a < 3; ++a)
      inner = inner && x[a] > 0.15 + dt * std::abs(c[a]) && x[a] < 0.85;
    if (!inner) continue;
    for (int a = 0; a < 3; ++a)
      transport = std::max(transport, std::abs(D.at(n)[a]));
  }
  double bound = 5.0 * (h * h + dt);

  *ok = rt <= 1e-12 && mass_err <= 0.05 && transport <= bound;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "round trip %.1e <= 1e-12, mass %.3f <= 0.05, transport %.2e <= %.2e",
                rt, mass_err, transport, bound);
  return buf;
}

// ---- criterion 7: admissibility safeguards ----
std::string c7(bool* ok) {
  const auto& R = *g_relax;
  bool dets = true, cn = true;
  for (const Snapshot& s : R.traj.snaps)
    if (s.status == StepStatus::Accepted) {
      dets = dets && s.min_det >= 1e-6;
      CiarletNecasReport rep = ciarlet_necas_residual(
          s.eta, build_kinematics(s.eta, R.g), R.g, R.cfg.cn_bg_nodes);
      cn = cn && rep.ok;
    }

  GridSpec g = make_grid(3, 5);
  Field fold = make_field(g.lat, 3);
  for (long n = 0; n < g.nodes(); ++n) {
    double x[3];
    g.lat.pos(g.lat.unflat(n), x);
    fold.at(n)[0] = std::min(x[0], 1.0 - x[0]) + 1e-3 * x[0];
    fold.at(n)[1] = x[1];
    fold.at(n)[2] = x[2];
  }
  DataProviders bad;
  bad.eta0 = fold;
  double m[3] = {0.0, 0.0, 1.0};
  bad.Mt0 = constant_field(g.lat, m, 3);
  StepConfig cfg;
  bool rejected = false;
  try {
    run_evolution(bad, MaterialParams{}, g, cfg);
  } catch (const AdmissibilityError&) {
    rejected = true;
  }

  RunConfig rc;
  rc.n = 5;
  rc.force_preset = "compress";
  rc.force_magnitude = 4e4;
  rc.step.dt = 2e-2;
  rc.step.t_end = 0.4;
  rc.step.max_iters = 300;
  GridSpec gc = make_grid_from(rc);
  DataProviders dc = make_data(rc, gc);
  TrajectoryStore crush = run_evolution(dc, rc.material, gc, rc.step);
  bool stopped = crush.snaps.back().status != StepStatus::Accepted;
  bool floor_kept = true;
  for (const Snapshot& s : crush.snaps)
    if (s.status == StepStatus::Accepted) floor_kept = floor_kept && s.min_det >= 1e-6;

  *ok = dets && cn && rejected && stopped && floor_kept;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "min det floor %d, interpenetration %d, fold rejected %d, crush stopped %d",
                dets && floor_kept ? 1 : 0, cn ? 1 : 0, rejected ? 1 : 0,
                stopped ? 1 : 0);
  return buf;
}

// ---- criterion 8: quadratic configuration vs direct linear solve ----
struct ToySetup {
  GridSpec g;
  MaterialParams p;
  DataProviders data;
  StepConfig cfg;
  ToySetup() : g(make_grid(3, 7, {0.0, 1.0}, "all")) {
    p.det_penalty_weight = 0.0;
    p.hessian_weight = 0.0;
    p.saturation_weight = 0.0;
    p.exchange_A = 0.0;
    p.K = 0.0;
    p.stray_field = false;
    RunConfig rc;
    rc.n = 7;
    rc.dirichlet = "all";
    rc.force_preset = "constant";
    rc.force_vector = {0.1, 0.2, -0.3};
    data = make_data(rc, g);
    cfg.dt = 1e-2;
    cfg.grad_tol = 1e-10;
    cfg.max_iters = 2000;
  }
};

std::string c8(bool* ok) {
  ToySetup T;
  const GridSpec& g = T.g;
  std::vector<long> eta_dofs;
  for (long n = 0; n < g.nodes(); ++n)
    if (!g.is_dirichlet(n)) eta_dofs.push_back(n);
  const long ne = static_cast<long>(eta_dofs.size()) * 3;
  const long nm = g.nodes() * 3;
  const long N = ne + nm;

  IncrementalFunctional F(g, T.p, T.data, T.data.eta0, T.data.Mt0, 1, T.cfg);
  Field eta = T.data.eta0, Mt = T.data.Mt0;
  Field gE = make_field(g.lat, 3), gM = make_field(g.lat, 3);
  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    for (long i = 0; i < static_cast<long>(eta_dofs.size()); ++i)
      for (int a = 0; a < 3; ++a)
        eta.at(eta_dofs[i])[a] = T.data.eta0.at(eta_dofs[i])[a] + x[i * 3 + a];
    for (long n = 0; n < g.nodes(); ++n)
      for (int a = 0; a < 3; ++a)
        Mt.at(n)[a] = T.data.Mt0.at(n)[a] + x[ne + n * 3 + a];
    F.value_and_grad(eta, Mt, gE, gM);
    grad.resize(N);
    for (long i = 0; i < static_cast<long>(eta_dofs.size()); ++i)
      for (int a = 0; a < 3; ++a) grad[i * 3 + a] = gE.at(eta_dofs[i])[a];
    for (long n = 0; n < g.nodes(); ++n)
      for (int a = 0; a < 3; ++a) grad[ne + n * 3 + a] = gM.at(n)[a];
  };

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(N), b(N), gcol(N);
  apply(x0, b);
  Eigen::MatrixXd A(N, N);
  const double eps = 1e-3;
  for (long j = 0; j < N; ++j) {
    Eigen::VectorXd xj = Eigen::VectorXd::Zero(N);
    xj[j] = eps;
    apply(xj, gcol);
    A.col(j) = (gcol - b) / eps;
  }
  double sym = (A - A.transpose()).cwiseAbs().maxCoeff() / A.cwiseAbs().maxCoeff();
  Eigen::VectorXd xstar = A.ldlt().solve(-b);

  StepResult r = minimize_step(F, T.cfg);
  Eigen::VectorXd xhat(N);
  for (long i = 0; i < static_cast<long>(eta_dofs.size()); ++i)
    for (int a = 0; a < 3; ++a)
      xhat[i * 3 + a] = r.eta.at(eta_dofs[i])[a] - T.data.eta0.at(eta_dofs[i])[a];
  for (long n = 0; n < g.nodes(); ++n)
    for (int a = 0; a < 3; ++a)
      xhat[ne + n * 3 + a] = r.Mt.at(n)[a] - T.data.Mt0.at(n)[a];
  double rel = (xhat - xstar).norm() / xstar.norm();

  // stationarity defects of the solved step against the smooth test bank
  TrajectoryStore traj;
  traj.dt = T.cfg.dt;
  Snapshot s0;
  s0.t = 0.0;
  s0.eta = T.data.eta0;
  s0.Mt = T.data.Mt0;
  traj.append(std::move(s0));
  Snapshot s1;
  s1.t = T.cfg.dt;
  s1.eta = r.eta;
  s1.Mt = r.Mt;
  s1.dissipation = r.dissipation;
  traj.append(std::move(s1));
  TestBank bank = make_test_bank(g);
  ElResidualReport el =
      el_residuals(traj, T.p, g, T.data, T.cfg, bank, 1e-10, 100.0, false);
  double defect = std::max(el.max_motion, el.max_magnetic);

  *ok = r.status == StepStatus::Accepted && rel <= 1e-8 && sym <= 1e-8 &&
        defect <= 1e-8;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "state rel err %.2e <= 1e-8, symmetry %.1e, bank defect %.2e <= 1e-8",
                rel, sym, defect);
  return buf;
}

// ---- criterion 9: time-step refinement behavior ----
std::string c9(bool* ok) {
  ToySetup T;
  auto lin_runner = [&](double dt) {
    StepConfig cfg = T.cfg;
    cfg.dt = dt;
    cfg.t_end = 0.16;
    return run_evolution(T.data, T.p, T.g, cfg);
  };
  RefinementReport lin = refinement_study(lin_runner, 0.02, 4, T.g);
  bool lin_ok = true;
  for (double r : lin.ratios) lin_ok = lin_ok && r >= 1.7 && r <= 2.3;

  GridSpec g = make_grid(3, 7);
  MaterialParams p;
  DataProviders data = relaxation_data(g, 0.96);
  auto nl_runner = [&](double dt) {
    StepConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 0.16;
    cfg.grad_tol = 1e-9;
    cfg.max_iters = 2000;
    return run_evolution(data, p, g, cfg);
  };
  RefinementReport nl = refinement_study(nl_runner, 0.02, 3, g);

  *ok = lin_ok && nl.monotone && nl.holder_spread <= 0.2;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "linear ratios %.2f/%.2f in [1.7,2.3], nonlinear monotone=%d, "
                "holder spread %.2f <= 0.2",
                lin.ratios.size() > 0 ? lin.ratios[0] : 0.0,
                lin.ratios.size() > 1 ? lin.ratios[1] : 0.0, nl.monotone ? 1 : 0,
                nl.holder_spread);
  return buf;
}

// ---- criterion 10: difference-quotient bound of the field averages ----
std::string c10(bool* ok) {
  GridSpec g = make_grid(3, 9);
  RunConfig rc;
  rc.hext_preset = "sinusoid";
  rc.hext_amplitude = 0.8;
  rc.hext_omega = 4.0;
  rc.hext_wavevector = {2.0, 1.0, 0.0};
  DataProviders data = make_data(rc, g);
  DiffQuotientReport rep =
      hext_difference_quotient_check(*data.hext, g, 0.01, 100);
  *ok = rep.ok && rep.lhs > 0.0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "lhs %.4f <= rhs %.4f over 100 steps", rep.lhs,
                rep.rhs);
  return buf;
}

}  // namespace

int main() {
  run_gate(1, "gradient-consistency", c1);
  run_gate(2, "stray-field-operator", c2);
  run_gate(3, "incremental-descent", c3);
  run_gate(4, "energy-budget", c4);
  run_gate(5, "energy-quadrature", c5);
  run_gate(6, "transport-dictionary", c6);
  run_gate(7, "admissibility", c7);
  run_gate(8, "quadratic-cross-check", c8);
  run_gate(9, "time-refinement", c9);
  run_gate(10, "field-difference-quotients", c10);
  delete g_relax;
  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
