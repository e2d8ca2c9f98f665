#include "magmove/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "magmove/ops.hpp"
#include "magmove/quadrature.hpp"
#include "magmove/smallmat.hpp"

namespace magmove {

void StepConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("step dt must be > 0");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be > 0");
  if (!(grad_tol > 0.0)) throw ConfigError("gradient tolerance must be > 0");
  if (max_iters <= 0) throw ConfigError("max_iters must be positive");
  if (!(energy_max > 0.0)) throw ConfigError("energy_max must be > 0");
  if (lbfgs_history <= 0) throw ConfigError("lbfgs history must be positive");
  if (stray_pad < 2.0) throw ConfigError("stray padding must be >= 2");
}

void mollify_force(const ForceProvider& f, double t, double kappa, double T,
                   const double* x, int d, double* out) {
  if (kappa <= 0.0) throw ContractError("mollifier width must be positive");
  if (t < -1e-12 || t > T + 1e-12)
    throw RangeError("mollified force requested outside [0, T]");
  t = std::clamp(t, 0.0, T);
  const double xi = kappa * (T - 2.0 * t) / T;  // shifts the window into [0,T]
  static const GaussRule rule = gauss_legendre(33);

  double acc[3] = {0.0, 0.0, 0.0};
  double mass = 0.0;
  double fv[3];
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    const double s = t + xi + kappa * rule.x[i];
    const double u = rule.x[i];  // (t + xi - s)/kappa = -u; theta is even
    const double theta = std::exp(-1.0 / std::max(1.0 - u * u, 1e-300));
    const double w = rule.w[i] * theta;
    f.eval(s, x, d, fv);
    for (int a = 0; a < d; ++a) acc[a] += w * fv[a];
    mass += w;
  }
  for (int a = 0; a < d; ++a) out[a] = acc[a] / mass;
}

ClementField::ClementField(std::shared_ptr<const ExternalFieldProvider> h, int k,
                           double dt)
    : h_(std::move(h)) {
  if (k < 1) throw ContractError("Clement average needs step index k >= 1");
  static const GaussRule rule = gauss_legendre(5);
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    times_.push_back((k - 1 + 0.5 * (rule.x[i] + 1.0)) * dt);
    weights_.push_back(0.5 * rule.w[i]);
  }
}

void ClementField::eval(const double* x, int d, double* H, double* gradH) const {
  double Hv[3], Gv[9];
  for (int a = 0; a < d; ++a) H[a] = 0.0;
  if (gradH)
    for (int i = 0; i < d * d; ++i) gradH[i] = 0.0;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    h_->eval(times_[i], x, d, Hv, gradH ? Gv : nullptr);
    for (int a = 0; a < d; ++a) H[a] += weights_[i] * Hv[a];
    if (gradH)
      for (int j = 0; j < d * d; ++j) gradH[j] += weights_[i] * Gv[j];
  }
}

IncrementalFunctional::IncrementalFunctional(const GridSpec& g,
                                             const MaterialParams& params,
                                             const DataProviders& data,
                                             const Field& eta_prev,
                                             const Field& Mt_prev, int k,
                                             const StepConfig& cfg,
                                             const Field* v_prev)
    : g_(g), p_(params), cfg_(cfg), eta_prev_(eta_prev), Mt_prev_(Mt_prev),
      dt_(cfg.dt) {
  prev_state_ = build_kinematics(eta_prev_, g_);
  if (!prev_state_.orientation_ok)
    throw ContractError("previous step state is not orientation-preserving");

  std::shared_ptr<const StrayContext> ctx;
  if (p_.stray_field)
    ctx = make_stray_context(eta_prev_, g_, cfg.stray_bg_nodes, cfg.stray_pad);
  energy_ = std::make_unique<EnergyModel>(g_, p_, ctx);

  const double kappa = cfg.kappa > 0.0 ? cfg.kappa : cfg.dt;
  const double t_k = std::min(k * cfg.dt, cfg.t_end);
  f_prev_ = make_field(g_.lat, g_.d());
  for (long n = 0; n < g_.nodes(); ++n)
    mollify_force(*data.force, t_k, kappa, cfg.t_end, eta_prev_.at(n), g_.d(),
                  f_prev_.at(n));
  hext_ = std::make_unique<ClementField>(data.hext, k, cfg.dt);

  if (cfg.inertial && v_prev) {
    v_prev_ = *v_prev;
    has_vprev_ = true;
  }
}

double IncrementalFunctional::step_dissipation(const Field& eta,
                                               const Field& Mt) const {
  const int d = g_.d();
  RatePair rates;
  rates.deta = make_field(g_.lat, d);
  rates.dMt = make_field(g_.lat, d);
  for (std::size_t i = 0; i < rates.deta.v.size(); ++i) {
    rates.deta.v[i] = (eta.v[i] - eta_prev_.v[i]) / dt_;
    rates.dMt.v[i] = (Mt.v[i] - Mt_prev_.v[i]) / dt_;
  }
  return dissipation_rate(prev_state_, rates, g_, p_);
}

namespace {

double inner_terms(const GridSpec& g, const MaterialParams& p,
                   const ClementField& hext, const Field& f_prev, double rho,
                   const Field& eta, const Field& Mt, const Field& eta_prev,
                   Field* gEta, Field* gMt) {
  const int d = g.d();
  double forcing = 0.0, zeeman = 0.0;
  double H[3], GH[9], tmp[3];
  for (long n = 0; n < g.nodes(); ++n) {
    const double w = g.qw[n];
    const double* fp = f_prev.at(n);
    for (int a = 0; a < d; ++a)
      forcing += w * rho * fp[a] * (eta.at(n)[a] - eta_prev.at(n)[a]);
    hext.eval(eta.at(n), d, H, gEta ? GH : nullptr);
    zeeman += w * p.mu * vdot(Mt.at(n), H, d);
    if (gEta) {
      double* ge = gEta->at(n);
      double* gm = gMt->at(n);
      for (int a = 0; a < d; ++a) {
        ge[a] -= w * rho * fp[a];
        gm[a] -= w * p.mu * H[a];
      }
      mtvec(GH, Mt.at(n), d, tmp);  // (grad H)^T Mt
      for (int a = 0; a < d; ++a) ge[a] -= w * p.mu * tmp[a];
    }
  }
  return -forcing - zeeman;
}

}  // namespace

double IncrementalFunctional::value(const Field& eta, const Field& Mt,
                                    EnergyBreakdown* bd_out) const {
  EnergyBreakdown bd = energy_->value(eta, Mt);
  if (bd_out) *bd_out = bd;
  if (bd.infinite) return std::numeric_limits<double>::infinity();
  double F = bd.total() + dt_ * step_dissipation(eta, Mt);
  F += inner_terms(g_, p_, *hext_, f_prev_, p_.rho, eta, Mt, eta_prev_, nullptr,
                   nullptr);
  if (cfg_.inertial && has_vprev_) {
    double acc = 0.0;
    for (long n = 0; n < g_.nodes(); ++n)
      for (int a = 0; a < g_.d(); ++a) {
        double r = eta.at(n)[a] - eta_prev_.at(n)[a] - dt_ * v_prev_.at(n)[a];
        acc += g_.qw[n] * r * r;
      }
    F += 0.5 * p_.rho / dt_ * acc;
  }
  return F;
}

double IncrementalFunctional::value_and_grad(const Field& eta, const Field& Mt,
                                             Field& gEta, Field& gMt,
                                             EnergyBreakdown* bd_out) const {
  const int d = g_.d();
  gEta = make_field(g_.lat, d);
  gMt = make_field(g_.lat, d);
  EnergyBreakdown bd = energy_->value_and_grad(eta, Mt, gEta, gMt);
  if (bd_out) *bd_out = bd;

  RatePair rates;
  rates.deta = make_field(g_.lat, d);
  rates.dMt = make_field(g_.lat, d);
  for (std::size_t i = 0; i < rates.deta.v.size(); ++i) {
    rates.deta.v[i] = (eta.v[i] - eta_prev_.v[i]) / dt_;
    rates.dMt.v[i] = (Mt.v[i] - Mt_prev_.v[i]) / dt_;
  }
  double R = dissipation_rate(prev_state_, rates, g_, p_);
  Field gR_eta, gR_M;
  grad_dissipation(prev_state_, rates, g_, p_, gR_eta, gR_M);
  // d/d(eta) of dt * R(rates) = dR/d(rate); same for Mt
  for (std::size_t i = 0; i < gEta.v.size(); ++i) {
    gEta.v[i] += gR_eta.v[i];
    gMt.v[i] += gR_M.v[i];
  }

  double F = bd.total() + dt_ * R;
  F += inner_terms(g_, p_, *hext_, f_prev_, p_.rho, eta, Mt, eta_prev_, &gEta,
                   &gMt);
  if (cfg_.inertial && has_vprev_) {
    double acc = 0.0;
    for (long n = 0; n < g_.nodes(); ++n)
      for (int a = 0; a < d; ++a) {
        double r = eta.at(n)[a] - eta_prev_.at(n)[a] - dt_ * v_prev_.at(n)[a];
        acc += g_.qw[n] * r * r;
        gEta.at(n)[a] += p_.rho / dt_ * g_.qw[n] * r;
      }
    F += 0.5 * p_.rho / dt_ * acc;
  }
  return F;
}

namespace {

// Degree-of-freedom packing: free deformation nodes plus all magnetization
// nodes, in grid order.
struct DofMap {
  const GridSpec& g;
  std::vector<long> eta_nodes;
  int d;
  std::size_t n_eta, n_total;

  explicit DofMap(const GridSpec& gg) : g(gg), d(gg.d()) {
    for (long n = 0; n < g.nodes(); ++n)
      if (!g.is_dirichlet(n)) eta_nodes.push_back(n);
    n_eta = eta_nodes.size() * d;
    n_total = n_eta + static_cast<std::size_t>(g.nodes()) * d;
  }

  void pack(const Field& eta, const Field& Mt, std::vector<double>& x) const {
    x.resize(n_total);
    std::size_t i = 0;
    for (long n : eta_nodes)
      for (int a = 0; a < d; ++a) x[i++] = eta.at(n)[a];
    for (long n = 0; n < g.nodes(); ++n)
      for (int a = 0; a < d; ++a) x[i++] = Mt.at(n)[a];
  }

  void unpack(const std::vector<double>& x, Field& eta, Field& Mt) const {
    std::size_t i = 0;
    for (long n : eta_nodes)
      for (int a = 0; a < d; ++a) eta.at(n)[a] = x[i++];
    for (long n = 0; n < g.nodes(); ++n)
      for (int a = 0; a < d; ++a) Mt.at(n)[a] = x[i++];
  }

  void pack_grad(const Field& gEta, const Field& gMt,
                 std::vector<double>& gx) const {
    gx.resize(n_total);
    std::size_t i = 0;
    for (long n : eta_nodes)
      for (int a = 0; a < d; ++a) gx[i++] = gEta.at(n)[a];
    for (long n = 0; n < g.nodes(); ++n)
      for (int a = 0; a < d; ++a) gx[i++] = gMt.at(n)[a];
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

struct LbfgsPair {
  std::vector<double> s, y;
  double rho;
};

// mask: 0.0 freezes a dof (used by the alternating debug mode); empty = all on
struct LbfgsOutcome {
  bool converged = false;
  bool line_search_failed = false;
  bool ran_away = false;
  int iterations = 0;
  double f = 0.0;
  double gnorm = 0.0;
};

LbfgsOutcome lbfgs_minimize(const IncrementalFunctional& F, const DofMap& map,
                            const StepConfig& cfg, std::vector<double>& x,
                            const std::vector<double>& mask) {
  const bool masked = !mask.empty();
  Field eta = make_field(F.grid().lat, F.grid().d());
  Field Mt = make_field(F.grid().lat, F.grid().d());
  // Dirichlet rows never change; seed them once from the previous state
  eta = F.eta_prev();
  Field gEta, gMt;

  auto eval_g = [&](const std::vector<double>& xv, std::vector<double>& gx) {
    map.unpack(xv, eta, Mt);
    double f = F.value_and_grad(eta, Mt, gEta, gMt);
    map.pack_grad(gEta, gMt, gx);
    if (masked)
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask[i];
    return f;
  };
  auto eval_f = [&](const std::vector<double>& xv) {
    map.unpack(xv, eta, Mt);
    return F.value(eta, Mt);
  };

  LbfgsOutcome out;
  std::vector<double> g(x.size()), xn(x.size()), gn(x.size());
  double f = eval_g(x, g);
  std::deque<LbfgsPair> hist;
  std::vector<double> p(x.size()), alpha_buf;

  for (int it = 0; it < cfg.max_iters; ++it) {
    out.iterations = it;
    out.f = f;
    out.gnorm = norm(g);
    if (out.gnorm <= cfg.grad_tol) {
      out.converged = true;
      return out;
    }
    if (f < -cfg.energy_max) {
      out.ran_away = true;
      return out;
    }

    // two-loop recursion
    p = g;
    alpha_buf.assign(hist.size(), 0.0);
    for (int i = static_cast<int>(hist.size()) - 1; i >= 0; --i) {
      alpha_buf[i] = hist[i].rho * dot(hist[i].s, p);
      for (std::size_t j = 0; j < p.size(); ++j)
        p[j] -= alpha_buf[i] * hist[i].y[j];
    }
    if (!hist.empty()) {
      const auto& last = hist.back();
      double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : p) v *= gamma;
    }
    for (std::size_t i = 0; i < hist.size(); ++i) {
      double beta = hist[i].rho * dot(hist[i].y, p);
      for (std::size_t j = 0; j < p.size(); ++j)
        p[j] += (alpha_buf[i] - beta) * hist[i].s[j];
    }
    for (double& v : p) v = -v;
    if (masked)
      for (std::size_t i = 0; i < p.size(); ++i) p[i] *= mask[i];

    double gp = dot(g, p);
    if (gp >= 0.0) {  // not a descent direction; reset
      hist.clear();
      for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = -g[i] * (masked ? mask[i] : 1.0);
      gp = dot(g, p);
      if (gp >= 0.0) {
        out.converged = out.gnorm <= cfg.grad_tol;
        return out;
      }
    }

    // backtracking with the +infinity sentinel rejecting min det <= 0
    double alpha = hist.empty() ? std::min(1.0, 1.0 / std::max(1.0, out.gnorm))
                                : 1.0;
    const double c1 = 1e-4;
    bool accepted = false;
    // allow a roundoff-sized slack: near a minimum the true decrease per
    // iteration drops below the precision of the functional value
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() *
                         std::abs(f);
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + alpha * p[i];
      double ft = eval_f(xn);
      if (std::isfinite(ft) && ft <= f + c1 * alpha * gp + slack) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!hist.empty()) {  // retry from a fresh quasi-Newton model
        hist.clear();
        continue;
      }
      out.line_search_failed = true;
      return out;
    }

    double fn = eval_g(xn, gn);
    LbfgsPair pair;
    pair.s.resize(x.size());
    pair.y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      pair.s[i] = xn[i] - x[i];
      pair.y[i] = gn[i] - g[i];
    }
    double sy = dot(pair.s, pair.y);
    if (sy > 1e-12 * norm(pair.s) * norm(pair.y)) {
      pair.rho = 1.0 / sy;
      hist.push_back(std::move(pair));
      if (static_cast<int>(hist.size()) > cfg.lbfgs_history) hist.pop_front();
    }
    x.swap(xn);
    g.swap(gn);
    f = fn;
  }
  out.f = f;
  out.gnorm = norm(g);
  out.iterations = cfg.max_iters;
  out.converged = out.gnorm <= cfg.grad_tol;
  return out;
}

}  // namespace

StepResult minimize_step(const IncrementalFunctional& F, const StepConfig& cfg) {
  const GridSpec& g = F.grid();
  const int d = g.d();
  DofMap map(g);

  std::vector<double> x;
  map.pack(F.eta_prev(), F.Mt_prev(), x);
  const double f_init = F.value(F.eta_prev(), F.Mt_prev());

  LbfgsOutcome out;
  if (!cfg.alternating) {
    out = lbfgs_minimize(F, map, cfg, x, {});
  } else {
    // debug mode: magnetization block, then deformation block, twice
    std::vector<double> mask_eta(x.size(), 0.0), mask_M(x.size(), 0.0);
    for (std::size_t i = 0; i < map.n_eta; ++i) mask_eta[i] = 1.0;
    for (std::size_t i = map.n_eta; i < x.size(); ++i) mask_M[i] = 1.0;
    for (int round = 0; round < 2; ++round) {
      out = lbfgs_minimize(F, map, cfg, x, mask_M);
      out = lbfgs_minimize(F, map, cfg, x, mask_eta);
    }
    out = lbfgs_minimize(F, map, cfg, x, {});
  }

  StepResult res;
  res.eta = F.eta_prev();
  res.Mt = F.Mt_prev();
  map.unpack(x, res.eta, res.Mt);
  res.iterations = out.iterations;

  Field gEta, gMt;
  res.functional_value = F.value_and_grad(res.eta, res.Mt, gEta, gMt, &res.energy);
  res.dissipation = F.step_dissipation(res.eta, res.Mt);
  {
    double se = 0.0, sm = 0.0;
    for (long n = 0; n < g.nodes(); ++n) {
      if (!g.is_dirichlet(n)) se += vdot(gEta.at(n), gEta.at(n), d);
      sm += vdot(gMt.at(n), gMt.at(n), d);
    }
    res.el_res_eta = std::sqrt(se);
    res.el_res_M = std::sqrt(sm);
  }

  // a minimizer may never increase the functional (inexact-arithmetic margin)
  if (res.functional_value >
      f_init + 1e-10 * std::abs(f_init) + 1e-300)
    throw DiagnosticError("descent property violated within a step");

  KinematicState st = build_kinematics(res.eta, g);
  res.min_det = st.min_det;

  if (out.ran_away || res.energy.total() > cfg.energy_max) {
    res.status = StepStatus::EnergyBlowup;
    return res;
  }
  if (!out.converged) {
    res.status = StepStatus::SolverFailure;
    return res;
  }

  CiarletNecasReport cn = ciarlet_necas_residual(res.eta, st, g, cfg.cn_bg_nodes);
  InjectivityReport inj = boundary_injectivity_margin(res.eta, g);
  res.cn_residual = cn.residual;
  res.injectivity_margin = inj.margin;
  if (!cn.ok || !inj.ok) {
    res.status = StepStatus::SelfContact;
    return res;
  }
  res.status = StepStatus::Accepted;
  return res;
}

TrajectoryStore run_evolution(const DataProviders& data,
                              const MaterialParams& params, const GridSpec& g,
                              const StepConfig& cfg) {
  cfg.validate();
  params.validate();
  const int d = g.d();
  check_conforming(data.eta0, g.lat, d, "initial deformation");
  check_conforming(data.Mt0, g.lat, d, "initial magnetization");

  KinematicState st0 = build_kinematics(data.eta0, g);
  if (!st0.orientation_ok)
    throw AdmissibilityError("initial deformation is not orientation-preserving");
  CiarletNecasReport cn0 = ciarlet_necas_residual(data.eta0, st0, g,
                                                  cfg.cn_bg_nodes);
  InjectivityReport inj0 = boundary_injectivity_margin(data.eta0, g);
  if (!cn0.ok || !inj0.ok)
    throw AdmissibilityError("initial deformation fails the admissibility checks");

  std::shared_ptr<const StrayContext> ctx0;
  if (params.stray_field)
    ctx0 = make_stray_context(data.eta0, g, cfg.stray_bg_nodes, cfg.stray_pad);
  EnergyModel em0(g, params, ctx0);
  EnergyBreakdown bd0 = em0.value(data.eta0, data.Mt0);
  if (bd0.infinite || !std::isfinite(bd0.total()))
    throw AdmissibilityError("initial state has infinite energy");

  TrajectoryStore traj;
  traj.dt = cfg.dt;
  Snapshot s0;
  s0.t = 0.0;
  s0.eta = data.eta0;
  s0.Mt = data.Mt0;
  s0.energy = bd0;
  s0.min_det = st0.min_det;
  s0.cn_residual = cn0.residual;
  s0.injectivity_margin = inj0.margin;
  traj.append(std::move(s0));

  const int nsteps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  Field v_prev;
  bool have_v = false;

  for (int k = 1; k <= nsteps; ++k) {
    const Snapshot& prev = traj.snaps.back();
    IncrementalFunctional F(g, params, data, prev.eta, prev.Mt, k, cfg,
                            (cfg.inertial && have_v) ? &v_prev : nullptr);
    StepResult res = minimize_step(F, cfg);

    Snapshot s;
    s.t = k * cfg.dt;
    s.eta = res.eta;
    s.Mt = res.Mt;
    s.energy = res.energy;
    s.dissipation = res.dissipation;
    s.status = res.status;
    s.min_det = res.min_det;
    s.cn_residual = res.cn_residual;
    s.injectivity_margin = res.injectivity_margin;
    s.el_res_eta = res.el_res_eta;
    s.el_res_M = res.el_res_M;
    s.iterations = res.iterations;

    if (cfg.inertial) {
      v_prev = make_field(g.lat, d);
      for (std::size_t i = 0; i < v_prev.v.size(); ++i)
        v_prev.v[i] = (res.eta.v[i] - prev.eta.v[i]) / cfg.dt;
      have_v = true;
    }

    bool stop = res.status != StepStatus::Accepted;
    traj.append(std::move(s));
    if (stop) break;
  }
  return traj;
}

}  // namespace magmove
