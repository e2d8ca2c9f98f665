#include "magmove/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "magmove/quadrature.hpp"
#include "magmove/smallmat.hpp"

namespace magmove {

namespace {

double bump(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

double weighted_l2(const GridSpec& g, const Field& f) {
  double s = 0.0;
  for (long n = 0; n < g.nodes(); ++n)
    s += g.qw[n] * vdot(f.at(n), f.at(n), g.d());
  return std::sqrt(s);
}

double pair_defect(const GridSpec& g, const Field& grad, const TestBank& bank) {
  double worst = 0.0;
  for (std::size_t j = 0; j < bank.chi.size(); ++j) {
    double s = 0.0;
    for (long n = 0; n < g.nodes(); ++n)
      s += vdot(grad.at(n), bank.chi[j].at(n), g.d());
    worst = std::max(worst, std::abs(s) / bank.l2[j]);
  }
  return worst;
}

void zero_dirichlet(const GridSpec& g, Field& f) {
  for (long n = 0; n < g.nodes(); ++n)
    if (g.is_dirichlet(n))
      for (int a = 0; a < g.d(); ++a) f.at(n)[a] = 0.0;
}

double max_frob2(const Field& F, const GridSpec& g) {
  double m = 0.0;
  for (long n = 0; n < g.nodes(); ++n)
    m = std::max(m, vdot(F.at(n), F.at(n), g.d() * g.d()));
  return m;
}

}  // namespace

TestBank make_test_bank(const GridSpec& g, std::uint64_t seed) {
  const int d = g.d();
  const double scales[3] = {0.15, 0.25, 0.4};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TestBank bank;
  for (double s : scales) {
    for (int rep = 0; rep < 9; ++rep) {
      double c[3], r[3];
      for (int a = 0; a < d; ++a) {
        double ext = g.lat.extent(a);
        r[a] = s * ext;
        double span = ext - 2.0 * r[a];
        c[a] = g.lat.lo[a] + r[a] + uni(rng) * std::max(span, 0.0);
      }
      double dir[3] = {0.0, 0.0, 0.0};
      double nrm = 0.0;
      while (nrm < 1e-8) {
        for (int a = 0; a < d; ++a) dir[a] = gauss(rng);
        nrm = std::sqrt(vdot(dir, dir, d));
      }
      for (int a = 0; a < d; ++a) dir[a] /= nrm;

      Field chi = make_field(g.lat, d);
      for (long n = 0; n < g.nodes(); ++n) {
        double x[3];
        g.lat.pos(g.lat.unflat(n), x);
        double b = 1.0;
        for (int a = 0; a < d; ++a) b *= bump((x[a] - c[a]) / r[a]);
        for (int a = 0; a < d; ++a) chi.at(n)[a] = b * dir[a];
      }
      bank.l2.push_back(std::max(weighted_l2(g, chi), 1e-300));
      bank.chi.push_back(std::move(chi));
    }
  }
  return bank;
}

double gronwall_envelope(const MaterialParams& p, double c2, double c3,
                         double omega_vol, double f_sup, double T) {
  const double rate = std::max(1.0, 8.0 * p.beta * p.beta);
  const double forcing =
      T * omega_vol * (p.rho * f_sup) * (p.rho * f_sup) / (2.0 * p.nu * c3);
  return (c2 + forcing) * std::exp(rate * T);
}

BudgetReport energy_budget_report(const TrajectoryStore& traj,
                                  const MaterialParams& p, const GridSpec& g,
                                  double f_sup, double hext_sup, bool strict) {
  if (traj.snaps.empty()) throw ContractError("budget needs a nonempty trajectory");

  BudgetReport rep;
  rep.force_free = (f_sup == 0.0 && hext_sup == 0.0);

  double cum = 0.0;
  double c3 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.snaps.size(); ++k) {
    const Snapshot& s = traj.snaps[k];
    if (s.status != StepStatus::Accepted) break;
    if (k > 0) cum += traj.dt * s.dissipation;
    BudgetRow row;
    row.k = static_cast<int>(k);
    row.t = s.t;
    row.energy = s.energy.total();
    row.cum_dissipation = cum;
    row.lhs = row.energy + cum;
    rep.rows.push_back(row);

    KinematicState st = build_kinematics(s.eta, g);
    double mf2 = max_frob2(st.F, g);
    c3 = std::min(c3, st.min_det / (g.d() * std::max(mf2, 1e-300)));
  }
  if (rep.rows.empty()) throw ContractError("no accepted snapshots in budget");

  rep.c2 = rep.rows.front().lhs;
  rep.c3 = c3;
  const double T = rep.rows.back().t;
  rep.envelope = gronwall_envelope(p, rep.c2, rep.c3, g.volume(), f_sup, T);

  const double e0 = rep.rows.front().energy;
  const double etol = 1e-10 * std::max(std::abs(e0), 1.0);
  int bad_step = -1;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    if (rep.force_free && rep.rows[k].energy > rep.rows[k - 1].energy + etol) {
      rep.energy_monotone = false;
      if (bad_step < 0) bad_step = rep.rows[k].k;
    }
    if (rep.rows[k].lhs > rep.envelope * (1.0 + 1e-12) + 1e-12) {
      rep.under_envelope = false;
      if (bad_step < 0) bad_step = rep.rows[k].k;
    }
  }
  rep.ok = rep.under_envelope && (!rep.force_free || rep.energy_monotone);
  if (!rep.ok) {
    rep.message = "budget violated at step " + std::to_string(bad_step);
    if (strict) throw DiagnosticError(rep.message);
  }
  return rep;
}

namespace {

Field step_velocity(const Field& a, const Field& b, double dt) {
  Field v = a;
  for (std::size_t i = 0; i < v.v.size(); ++i) v.v[i] = (b.v[i] - a.v[i]) / dt;
  return v;
}

}  // namespace

ElResidualReport el_residuals(const TrajectoryStore& traj,
                              const MaterialParams& p, const GridSpec& g,
                              const DataProviders& data, const StepConfig& cfg,
                              const TestBank& bank, double solver_tol,
                              double conditioning, bool strict) {
  ElResidualReport rep;
  rep.bound = solver_tol * conditioning;
  Field gEta, gMt;
  for (std::size_t k = 1; k < traj.snaps.size(); ++k) {
    const Snapshot& prev = traj.snaps[k - 1];
    const Snapshot& cur = traj.snaps[k];
    if (cur.status != StepStatus::Accepted) break;

    Field v_prev;
    bool have_v = cfg.inertial && k >= 2;
    if (have_v)
      v_prev = step_velocity(traj.snaps[k - 2].eta, prev.eta, traj.dt);
    IncrementalFunctional F(g, p, data, prev.eta, prev.Mt, static_cast<int>(k),
                            cfg, have_v ? &v_prev : nullptr);
    F.value_and_grad(cur.eta, cur.Mt, gEta, gMt);
    zero_dirichlet(g, gEta);

    ElResidualRow row;
    row.k = static_cast<int>(k);
    row.motion_defect = pair_defect(g, gEta, bank);
    row.magnetic_defect = pair_defect(g, gMt, bank);
    rep.rows.push_back(row);
    rep.max_motion = std::max(rep.max_motion, row.motion_defect);
    rep.max_magnetic = std::max(rep.max_magnetic, row.magnetic_defect);
  }
  rep.ok = std::max(rep.max_motion, rep.max_magnetic) <= rep.bound;
  if (!rep.ok && strict)
    throw DiagnosticError("stationarity defect above solver tolerance bound");
  return rep;
}

RefinementReport refinement_study(
    const std::function<TrajectoryStore(double)>& runner, double dt0,
    int levels, const GridSpec& g) {
  if (levels < 3) throw ContractError("refinement study needs >= 3 levels");

  std::vector<TrajectoryStore> runs;
  for (int l = 0; l < levels; ++l) runs.push_back(runner(dt0 / (1 << l)));

  RefinementReport rep;
  for (int l = 0; l < levels; ++l) {
    RefinementLevel lev;
    lev.dt = runs[l].dt;

    // Holder-1/2 constant over stored snapshot pairs
    const auto& snaps = runs[l].snaps;
    double C = 0.0;
    for (std::size_t i = 0; i < snaps.size(); ++i)
      for (std::size_t j = i + 1; j < snaps.size(); ++j) {
        Field diff = snaps[i].eta;
        for (std::size_t q = 0; q < diff.v.size(); ++q)
          diff.v[q] = snaps[j].eta.v[q] - snaps[i].eta.v[q];
        double num = weighted_l2(g, diff);
        C = std::max(C, num / std::sqrt(snaps[j].t - snaps[i].t));
      }
    lev.holder_const = C;

    if (l > 0) {
      // sup over the coarser level's snapshot times of the interpolant gap
      double worst = 0.0;
      double t_hi = std::min(runs[l - 1].t_end(), runs[l].t_end());
      for (const Snapshot& s : runs[l - 1].snaps) {
        if (s.t > t_hi + 1e-12) break;
        auto [ec, mc] = runs[l - 1].eval(s.t, InterpMode::Affine);
        auto [ef, mf] = runs[l].eval(s.t, InterpMode::Affine);
        double acc = 0.0;
        for (long n = 0; n < g.nodes(); ++n) {
          for (int a = 0; a < g.d(); ++a) {
            double de = ec.at(n)[a] - ef.at(n)[a];
            double dm = mc.at(n)[a] - mf.at(n)[a];
            acc += g.qw[n] * (de * de + dm * dm);
          }
        }
        worst = std::max(worst, std::sqrt(acc));
      }
      lev.discrepancy = worst;
    }
    rep.levels.push_back(lev);
  }

  for (int l = 1; l + 1 < levels; ++l) {
    double a = rep.levels[l].discrepancy, b = rep.levels[l + 1].discrepancy;
    double ratio = (b == 0.0) ? (a == 0.0 ? 1.0
                                          : std::numeric_limits<double>::infinity())
                              : a / b;
    rep.ratios.push_back(ratio);
    if (b > a + 1e-14) rep.monotone = false;
  }

  double mean = 0.0;
  for (const auto& lev : rep.levels) mean += lev.holder_const;
  mean /= levels;
  if (mean > 0.0)
    for (const auto& lev : rep.levels)
      rep.holder_spread =
          std::max(rep.holder_spread, std::abs(lev.holder_const - mean) / mean);
  return rep;
}

WeakResidualReport weak_residual_check(const TrajectoryStore& traj,
                                       const MaterialParams& p,
                                       const GridSpec& g,
                                       const DataProviders& data,
                                       const StepConfig& cfg,
                                       const TestBank& bank) {
  WeakResidualReport rep;
  const int d = g.d();
  if (traj.snaps.empty()) throw ContractError("empty trajectory");

  // initial-condition attainment distances
  const Snapshot& s0 = traj.snaps.front();
  KinematicState st0 = build_kinematics(s0.eta, g);
  for (const Snapshot& s : traj.snaps) {
    KinematicState st = build_kinematics(s.eta, g);
    double c1 = 0.0;
    for (long n = 0; n < g.nodes(); ++n) {
      for (int a = 0; a < d; ++a)
        c1 = std::max(c1, std::abs(s.eta.at(n)[a] - s0.eta.at(n)[a]));
      for (int a = 0; a < d * d; ++a)
        c1 = std::max(c1, std::abs(st.F.at(n)[a] - st0.F.at(n)[a]));
    }
    rep.eta_c1_to_initial.push_back(c1);
    Field dM = s.Mt;
    for (std::size_t i = 0; i < dM.v.size(); ++i) dM.v[i] -= s0.Mt.v[i];
    rep.Mt_l2_to_initial.push_back(weighted_l2(g, dM));
  }

  Field gEta, gMt;
  for (std::size_t k = 1; k < traj.snaps.size(); ++k) {
    const Snapshot& prev = traj.snaps[k - 1];
    const Snapshot& cur = traj.snaps[k];
    if (cur.status != StepStatus::Accepted) break;

    IncrementalFunctional F(g, p, data, prev.eta, prev.Mt, static_cast<int>(k),
                            cfg);
    F.value_and_grad(cur.eta, cur.Mt, gEta, gMt);
    zero_dirichlet(g, gEta);
    rep.motion_defect.push_back(pair_defect(g, gEta, bank));

    // magnetic balance with the time-rate rebuilt through the Eulerian
    // dictionary: dMt/dt = det * (D_t M) o eta
    KinematicState st_prev = build_kinematics(prev.eta, g);
    KinematicState st_cur = build_kinematics(cur.eta, g);
    BackgroundGrid bg = make_background_grid(cur.eta, d, cfg.stray_bg_nodes, 0.15);
    EulerianField M0 = push_forward_magnetization(prev.Mt, prev.eta, st_prev, g, bg);
    EulerianField M1 = push_forward_magnetization(cur.Mt, cur.eta, st_cur, g, bg);
    Field deta = step_velocity(prev.eta, cur.eta, traj.dt);
    EulerianField v = eulerian_velocity(cur.eta, deta, st_cur, g, bg);
    Field DtM = material_derivative(M0.f, M1.f, v.f, traj.dt, bg);

    // swap the discrete rate term of gMt for the transported one
    RatePair rates;
    rates.deta = deta;
    rates.dMt = step_velocity(prev.Mt, cur.Mt, traj.dt);
    Field gR_eta, gR_M;
    grad_dissipation(st_prev, rates, g, p, gR_eta, gR_M);
    Field gM_weak = gMt;
    double y[3], sampled[3];
    for (long n = 0; n < g.nodes(); ++n) {
      for (int a = 0; a < d; ++a) y[a] = cur.eta.at(n)[a];
      if (sample_multilinear(bg.lat, DtM, y, sampled)) {
        double scale = g.qw[n] * st_cur.det.at(n)[0] / st_prev.det.at(n)[0];
        for (int a = 0; a < d; ++a)
          gM_weak.at(n)[a] += scale * sampled[a] - gR_M.at(n)[a];
      }
    }
    rep.magnetic_defect.push_back(pair_defect(g, gM_weak, bank));
  }

  for (double v : rep.motion_defect) rep.max_motion = std::max(rep.max_motion, v);
  for (double v : rep.magnetic_defect)
    rep.max_magnetic = std::max(rep.max_magnetic, v);
  return rep;
}

DiffQuotientReport hext_difference_quotient_check(
    const ExternalFieldProvider& h, const GridSpec& g, double dt, int steps) {
  if (steps < 2) throw ContractError("difference-quotient check needs >= 2 steps");
  const int d = g.d();
  const double p43 = 4.0 / 3.0;

  auto lp43 = [&](const Field& f) {
    double s = 0.0;
    for (long n = 0; n < g.nodes(); ++n)
      s += g.qw[n] * std::pow(std::sqrt(vdot(f.at(n), f.at(n), d)), p43);
    return s;  // already ||f||^{4/3}_{L^{4/3}}
  };

  auto hext = std::shared_ptr<const ExternalFieldProvider>(
      &h, [](const ExternalFieldProvider*) {});
  std::vector<Field> H;
  for (int l = 1; l <= steps; ++l) {
    ClementField cl(hext, l, dt);
    Field f = make_field(g.lat, d);
    for (long n = 0; n < g.nodes(); ++n) {
      double x[3];
      g.lat.pos(g.lat.unflat(n), x);
      cl.eval(x, d, f.at(n), nullptr);
    }
    H.push_back(std::move(f));
  }

  DiffQuotientReport rep;
  for (int l = 1; l < steps; ++l) {
    Field q = H[l];
    for (std::size_t i = 0; i < q.v.size(); ++i)
      q.v[i] = (H[l].v[i] - H[l - 1].v[i]) / dt;
    rep.lhs += dt * lp43(q);
  }

  static const GaussRule rule = gauss_legendre(5);
  Field dH = make_field(g.lat, d);
  for (int l = 0; l < steps; ++l) {
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      double t = (l + 0.5 * (rule.x[i] + 1.0)) * dt;
      for (long n = 0; n < g.nodes(); ++n) {
        double x[3];
        g.lat.pos(g.lat.unflat(n), x);
        h.dt_eval(t, x, d, dH.at(n));
      }
      rep.rhs += 0.5 * rule.w[i] * dt * lp43(dH);
    }
  }
  rep.ok = rep.lhs <= rep.rhs * (1.0 + 1e-10) + 1e-14;
  return rep;
}

namespace {

// sum of three random low modes, each vanishing on the whole boundary
void smooth_modes(const GridSpec& g, std::mt19937_64& rng, double amp, Field& f) {
  const int d = g.d();
  const double pi = 3.14159265358979323846;
  std::uniform_int_distribution<int> mode(1, 3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  f = make_field(g.lat, d);
  for (int rep = 0; rep < 3; ++rep) {
    int k[3];
    double coef[3];
    for (int a = 0; a < d; ++a) k[a] = mode(rng);
    for (int a = 0; a < d; ++a) coef[a] = amp * gauss(rng);
    for (long n = 0; n < g.nodes(); ++n) {
      double x[3];
      g.lat.pos(g.lat.unflat(n), x);
      double s = 1.0;
      for (int a = 0; a < d; ++a) {
        double u = (x[a] - g.lat.lo[a]) / g.lat.extent(a);
        s *= std::sin(pi * k[a] * u);
      }
      for (int a = 0; a < d; ++a) f.at(n)[a] += coef[a] * s;
    }
  }
}

}  // namespace

void random_smooth_state(const GridSpec& g, std::uint64_t seed, Field& eta,
                         Field& Mt, double amplitude) {
  std::mt19937_64 rng(seed);
  Field pert;
  smooth_modes(g, rng, amplitude, pert);
  Field id = identity_deformation(g);
  double scale = 1.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    eta = id;
    for (std::size_t i = 0; i < eta.v.size(); ++i)
      eta.v[i] += scale * pert.v[i];
    if (build_kinematics(eta, g).min_det > 0.5) break;
    scale *= 0.5;
  }

  smooth_modes(g, rng, 0.3, Mt);
  for (long n = 0; n < g.nodes(); ++n) Mt.at(n)[g.d() - 1] += 1.0;
}

void random_smooth_direction(const GridSpec& g, std::uint64_t seed, Field& dEta,
                             Field& dMt) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  smooth_modes(g, rng, 1.0, dEta);
  smooth_modes(g, rng, 1.0, dMt);
}

namespace {

double best_fd_error(const std::function<double(double)>& restricted,
                     double analytic) {
  const double steps[7] = {1e-3, 5e-4, 1e-4, 5e-5, 1e-5, 5e-6, 1e-6};
  double best = std::numeric_limits<double>::infinity();
  for (double h : steps) {
    double fd = (restricted(h) - restricted(-h)) / (2.0 * h);
    double scale = std::max({std::abs(analytic), std::abs(fd), 1e-12});
    best = std::min(best, std::abs(fd - analytic) / scale);
  }
  return best;
}

void axpy(Field& out, const Field& base, const Field& dir, double t) {
  out = base;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += t * dir.v[i];
}

}  // namespace

GradCheckReport gradient_check(const GridSpec& g, const MaterialParams& p,
                               const DataProviders& data, const StepConfig& cfg,
                               std::uint64_t seed) {
  const int d = g.d();
  Field eta_prev, Mt_prev, eta, Mt, dEta, dMt;
  random_smooth_state(g, seed, eta_prev, Mt_prev);
  random_smooth_state(g, seed + 1000, eta, Mt);
  random_smooth_direction(g, seed, dEta, dMt);
  for (long n = 0; n < g.nodes(); ++n)
    if (g.is_dirichlet(n))
      for (int a = 0; a < d; ++a) dEta.at(n)[a] = 0.0;
  // the Dirichlet trace must match the previous state exactly
  for (long n = 0; n < g.nodes(); ++n)
    if (g.is_dirichlet(n))
      for (int a = 0; a < d; ++a) eta.at(n)[a] = eta_prev.at(n)[a];

  GradCheckReport rep;
  Field e1, m1, gE, gM;

  {
    std::shared_ptr<const StrayContext> ctx;
    if (p.stray_field)
      ctx = make_stray_context(eta_prev, g, cfg.stray_bg_nodes, cfg.stray_pad);
    EnergyModel em(g, p, ctx);
    em.value_and_grad(eta, Mt, gE, gM);
    double analytic = 0.0;
    for (std::size_t i = 0; i < gE.v.size(); ++i)
      analytic += gE.v[i] * dEta.v[i] + gM.v[i] * dMt.v[i];
    rep.energy_err = best_fd_error(
        [&](double t) {
          axpy(e1, eta, dEta, t);
          axpy(m1, Mt, dMt, t);
          return em.value(e1, m1).total();
        },
        analytic);
  }

  {
    KinematicState st = build_kinematics(eta_prev, g);
    RatePair rates;
    rates.deta = make_field(g.lat, d);
    rates.dMt = make_field(g.lat, d);
    for (std::size_t i = 0; i < rates.deta.v.size(); ++i) {
      rates.deta.v[i] = (eta.v[i] - eta_prev.v[i]) / cfg.dt;
      rates.dMt.v[i] = (Mt.v[i] - Mt_prev.v[i]) / cfg.dt;
    }
    Field gRe, gRm;
    grad_dissipation(st, rates, g, p, gRe, gRm);
    double analytic = 0.0;
    for (std::size_t i = 0; i < gRe.v.size(); ++i)
      analytic += gRe.v[i] * dEta.v[i] + gRm.v[i] * dMt.v[i];
    RatePair r1;
    rep.dissipation_err = best_fd_error(
        [&](double t) {
          r1.deta = rates.deta;
          r1.dMt = rates.dMt;
          for (std::size_t i = 0; i < r1.deta.v.size(); ++i) {
            r1.deta.v[i] += t * dEta.v[i];
            r1.dMt.v[i] += t * dMt.v[i];
          }
          return dissipation_rate(st, r1, g, p);
        },
        analytic);
  }

  {
    IncrementalFunctional F(g, p, data, eta_prev, Mt_prev, 1, cfg);
    Field gFe, gFm;
    F.value_and_grad(eta, Mt, gFe, gFm);
    double analytic = 0.0;
    for (std::size_t i = 0; i < gFe.v.size(); ++i)
      analytic += gFe.v[i] * dEta.v[i] + gFm.v[i] * dMt.v[i];
    rep.functional_err = best_fd_error(
        [&](double t) {
          axpy(e1, eta, dEta, t);
          axpy(m1, Mt, dMt, t);
          return F.value(e1, m1);
        },
        analytic);
  }
  return rep;
}

}  // namespace magmove
