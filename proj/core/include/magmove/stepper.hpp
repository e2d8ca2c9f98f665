#pragma once

#include <functional>
#include <memory>

#include "magmove/dissipation.hpp"
#include "magmove/energy.hpp"
#include "magmove/trajectory.hpp"

namespace magmove {

// Body force in the current configuration.
struct ForceProvider {
  virtual ~ForceProvider() = default;
  virtual void eval(double t, const double* x, int d, double* f) const = 0;
  virtual double sup_norm() const = 0;
};

// External magnetic field with spatial gradient and time derivative.
struct ExternalFieldProvider {
  virtual ~ExternalFieldProvider() = default;
  // gradH (d x d, row a = grad of component a) may be null.
  virtual void eval(double t, const double* x, int d, double* H,
                    double* gradH) const = 0;
  virtual void dt_eval(double t, const double* x, int d, double* dH) const = 0;
  virtual double sup_norm() const = 0;
};

struct ZeroForce final : ForceProvider {
  void eval(double, const double*, int d, double* f) const override {
    for (int a = 0; a < d; ++a) f[a] = 0.0;
  }
  double sup_norm() const override { return 0.0; }
};

struct ZeroExternalField final : ExternalFieldProvider {
  void eval(double, const double*, int d, double* H, double* gH) const override {
    for (int a = 0; a < d; ++a) H[a] = 0.0;
    if (gH)
      for (int i = 0; i < d * d; ++i) gH[i] = 0.0;
  }
  void dt_eval(double, const double*, int d, double* dH) const override {
    for (int a = 0; a < d; ++a) dH[a] = 0.0;
  }
  double sup_norm() const override { return 0.0; }
};

struct DataProviders {
  std::shared_ptr<const ForceProvider> force = std::make_shared<ZeroForce>();
  std::shared_ptr<const ExternalFieldProvider> hext =
      std::make_shared<ZeroExternalField>();
  Field eta0;
  Field Mt0;
};

struct StepConfig {
  double dt = 1e-2;
  double t_end = 0.5;
  double kappa = -1.0;  // mollification width; <= 0 means kappa = dt
  double grad_tol = 1e-8;
  int max_iters = 800;
  double energy_max = 1e8;
  bool inertial = false;
  std::uint64_t seed = 0;
  int lbfgs_history = 10;
  int cn_bg_nodes = 32;       // resolution of the per-step interpenetration check
  int stray_bg_nodes = 24;    // background grid of the stray term
  double stray_pad = 3.0;
  bool alternating = false;   // debug mode: block-wise instead of joint
  int snapshot_stride = 0;    // informational; persistence is the caller's job

  void validate() const;
};

// Time-mollified body force: f_k(t) = int theta_k(t + xi(t) - s) f(s) ds with
// the support shifted into [0, T]; 33-point Gauss rule, discretely normalized
// so constants are reproduced exactly.
void mollify_force(const ForceProvider& f, double t, double kappa, double T,
                   const double* x, int d, double* out);

// Zero-order Clement quasi-interpolant of the external field on step k:
// the average over ((k-1)dt, k dt), 5-point Gauss per component request.
class ClementField {
 public:
  ClementField(std::shared_ptr<const ExternalFieldProvider> h, int k, double dt);
  void eval(const double* x, int d, double* H, double* gradH) const;

 private:
  std::shared_ptr<const ExternalFieldProvider> h_;
  std::vector<double> times_, weights_;
};

// The incremental functional of one minimizing-movements step.
class IncrementalFunctional {
 public:
  IncrementalFunctional(const GridSpec& g, const MaterialParams& params,
                        const DataProviders& data, const Field& eta_prev,
                        const Field& Mt_prev, int k, const StepConfig& cfg,
                        const Field* v_prev = nullptr);

  double value(const Field& eta, const Field& Mt,
               EnergyBreakdown* bd = nullptr) const;
  double value_and_grad(const Field& eta, const Field& Mt, Field& gEta,
                        Field& gMt, EnergyBreakdown* bd = nullptr) const;
  // R-tilde evaluated at the rates from the previous state to (eta, Mt).
  double step_dissipation(const Field& eta, const Field& Mt) const;

  const GridSpec& grid() const { return g_; }
  const Field& eta_prev() const { return eta_prev_; }
  const Field& Mt_prev() const { return Mt_prev_; }
  const EnergyModel& energy() const { return *energy_; }

 private:
  const GridSpec& g_;
  MaterialParams p_;
  StepConfig cfg_;
  Field eta_prev_, Mt_prev_;
  Field v_prev_;
  bool has_vprev_ = false;
  KinematicState prev_state_;
  std::unique_ptr<EnergyModel> energy_;
  Field f_prev_;  // mollified force sampled at the previous deformation
  std::unique_ptr<ClementField> hext_;
  double dt_;
};

struct StepResult {
  Field eta;
  Field Mt;
  double functional_value = 0.0;
  EnergyBreakdown energy;
  double dissipation = 0.0;
  double el_res_eta = 0.0;
  double el_res_M = 0.0;
  int iterations = 0;
  StepStatus status = StepStatus::Accepted;
  double min_det = 0.0;
  double cn_residual = 0.0;
  double injectivity_margin = 0.0;
};

StepResult minimize_step(const IncrementalFunctional& F, const StepConfig& cfg);

TrajectoryStore run_evolution(const DataProviders& data,
                              const MaterialParams& params, const GridSpec& g,
                              const StepConfig& cfg);

}  // namespace magmove
