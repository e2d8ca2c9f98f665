#pragma once

#include <functional>

#include "magmove/stepper.hpp"
#include "magmove/trajectory.hpp"

namespace magmove {

// Fixed bank of smooth, compactly supported vector test fields: tensor-product
// bumps at three scales with seeded random centers and directions.
struct TestBank {
  std::vector<Field> chi;
  std::vector<double> l2;  // quadrature-weighted L2 norm of each entry
};

TestBank make_test_bank(const GridSpec& g, std::uint64_t seed = 1234);

struct BudgetRow {
  int k = 0;
  double t = 0.0;
  double energy = 0.0;
  double cum_dissipation = 0.0;  // dt * sum of step dissipation rates
  double lhs = 0.0;              // energy + cum_dissipation
};

struct BudgetReport {
  std::vector<BudgetRow> rows;
  double envelope = 0.0;
  double c2 = 0.0;  // realized initial bound
  double c3 = 0.0;  // realized min det / (d * max |F|^2)
  bool force_free = true;
  bool energy_monotone = true;
  bool under_envelope = true;
  bool ok = true;
  std::string message;
};

// envelope = (c2 + T |Omega0| (rho f_sup)^2 / (2 nu c3)) * exp(max{1, 8 b^2} T)
double gronwall_envelope(const MaterialParams& p, double c2, double c3,
                         double omega_vol, double f_sup, double T);

// Verifies the per-step energy + cumulative-dissipation budget against the
// envelope built from realized run constants. strict: throw on violation.
BudgetReport energy_budget_report(const TrajectoryStore& traj,
                                  const MaterialParams& p, const GridSpec& g,
                                  double f_sup, double hext_sup,
                                  bool strict = true);

struct ElResidualRow {
  int k = 0;
  double motion_defect = 0.0;    // max normalized pairing of gEta with the bank
  double magnetic_defect = 0.0;  // same for gMt
};

struct ElResidualReport {
  std::vector<ElResidualRow> rows;
  double max_motion = 0.0;
  double max_magnetic = 0.0;
  double bound = 0.0;
  bool ok = true;
};

// Pairs the discrete stationarity gradients of each accepted step against the
// test bank; defects must stay below solver_tol * conditioning.
ElResidualReport el_residuals(const TrajectoryStore& traj,
                              const MaterialParams& p, const GridSpec& g,
                              const DataProviders& data, const StepConfig& cfg,
                              const TestBank& bank, double solver_tol,
                              double conditioning, bool strict = true);

struct RefinementLevel {
  double dt = 0.0;
  double discrepancy = 0.0;   // sup-over-time distance to the previous level
  double holder_const = 0.0;  // fitted C in ||eta(t1)-eta(t2)|| <= C sqrt(dt12)
};

struct RefinementReport {
  std::vector<RefinementLevel> levels;
  std::vector<double> ratios;  // consecutive discrepancy ratios
  bool monotone = true;
  double holder_spread = 0.0;  // max relative deviation from the mean constant
};

// Runs the supplied runner at dt0, dt0/2, ... and compares the affine
// interpolants on the common time grid.
RefinementReport refinement_study(
    const std::function<TrajectoryStore(double)>& runner, double dt0,
    int levels, const GridSpec& g);

struct WeakResidualReport {
  std::vector<double> motion_defect;       // per step, Lagrangian weak form
  std::vector<double> magnetic_defect;     // per step, Eulerian transport form
  std::vector<double> eta_c1_to_initial;   // per snapshot ||eta(t)-eta0||_C1
  std::vector<double> Mt_l2_to_initial;    // per snapshot ||Mt(t)-Mt0||_L2
  double max_motion = 0.0;
  double max_magnetic = 0.0;
};

// Report-only evaluation of the continuous weak balances on the interpolants,
// with the magnetic transport term rebuilt from the Eulerian dictionary.
WeakResidualReport weak_residual_check(const TrajectoryStore& traj,
                                       const MaterialParams& p,
                                       const GridSpec& g,
                                       const DataProviders& data,
                                       const StepConfig& cfg,
                                       const TestBank& bank);

struct DiffQuotientReport {
  double lhs = 0.0;  // dt * sum_{l>=2} ||(H^l - H^{l-1})/dt||^{4/3}_{L^{4/3}}
  double rhs = 0.0;  // int_0^{k dt} ||dt H_ext||^{4/3}_{L^{4/3}}
  bool ok = false;
};

// Difference-quotient bound for the interval averages of the external field,
// with the spatial norm taken over the reference nodes.
DiffQuotientReport hext_difference_quotient_check(
    const ExternalFieldProvider& h, const GridSpec& g, double dt, int steps);

// Seeded smooth admissible state: identity plus low-mode sine perturbations
// vanishing on the whole boundary, magnetization near the unit z direction.
void random_smooth_state(const GridSpec& g, std::uint64_t seed, Field& eta,
                         Field& Mt, double amplitude = 0.05);

// Smooth direction field for directional-derivative tests; the deformation
// part vanishes on the boundary (hence on any Dirichlet set).
void random_smooth_direction(const GridSpec& g, std::uint64_t seed, Field& dEta,
                             Field& dMt);

struct GradCheckReport {
  double energy_err = 0.0;       // stored energy, incl. stray when enabled
  double dissipation_err = 0.0;  // rate potential in both rate arguments
  double functional_err = 0.0;   // full incremental functional
  double worst() const {
    return std::max(energy_err, std::max(dissipation_err, functional_err));
  }
};

// Central-difference directional-derivative check at a seeded smooth state;
// each entry is the best relative error over the step sweep 1e-3 ... 1e-6.
GradCheckReport gradient_check(const GridSpec& g, const MaterialParams& p,
                               const DataProviders& data, const StepConfig& cfg,
                               std::uint64_t seed);

}  // namespace magmove
