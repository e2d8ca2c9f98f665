#pragma once

#include <memory>
#include <utility>

#include "magmove/field.hpp"
#include "magmove/kinematics.hpp"

namespace magmove {

// Demagnetizing field of a compactly supported magnetization, computed by
// zero-padded spectral convolution with the projection kernel
// H_k = -k (k . M_k)/|k|^2. The k = 0 mode and all Nyquist planes carry zero
// kernel, which makes the discrete operator an exact symmetric projection:
// the energy identity -int M.H = int |H|^2 then holds to machine precision.
struct StrayFieldSolution {
  BackgroundGrid grid;       // the grid M lives on
  Lattice padded;            // padded lattice (same spacing, larger, shifted)
  std::array<int, 3> offset{};  // index of grid's origin inside padded
  Field phi;                 // potential on the padded lattice, zero mean
  Field H;                   // field on the padded lattice, d comps
  double field_energy = 0.0; // mu/2 * sum |H|^2 * cell volume

  // H value at the padded node corresponding to background node index.
  const double* H_at(long bg_node) const;
};

// pad_factor < 2 is rejected (aliasing of the periodic images).
StrayFieldSolution solve_stray_field(const Field& M, const BackgroundGrid& bg,
                                     double mu, double pad_factor = 3.0);

// (lhs, rhs) of the energy identity: lhs = -mu/2 int M.H, rhs = mu/2 int |H|^2.
std::pair<double, double> stray_energy_identity(const Field& M,
                                                const StrayFieldSolution& sol,
                                                double mu);

// ||H||_L2 / ||M||_L2 on the padded grid; 0 for M = 0.
double stability_check(const Field& M, const StrayFieldSolution& sol);

// H(eta(X)) at every reference node, multilinear sampling (zero outside).
Field pullback_stray(const StrayFieldSolution& sol, const Field& eta,
                     const GridSpec& g);

// --- smooth transfer between the reference grid and the background grid ---
//
// The stray term inside the energy needs a magnetization on the background
// grid that depends smoothly on the deformation; nodal Lagrangian values are
// therefore deposited with a tensor-product cubic B-spline (C^2, partition of
// unity), which keeps the term differentiable and gives exact adjoints.

// M_b = (1/hb^d) sum_i qw_i B(x_b - eta(X_i)) Mt_i
Field deposit_magnetization(const GridSpec& g, const Field& eta, const Field& Mt,
                            const BackgroundGrid& bg);

// Accumulates d/d(eta) and d/d(Mt) of S = -(mu/2) hb^d sum_b M_b . H_b
// given the field H on the background grid produced from the deposited M.
void stray_deposit_adjoint(const GridSpec& g, const Field& eta, const Field& Mt,
                           const BackgroundGrid& bg, const Field& H_bg, double mu,
                           Field& gEta, Field& gMt);

// Context fixing the background grid (and padding) across one incremental
// minimization, so the stray energy is smooth in the unknowns.
struct StrayContext {
  BackgroundGrid bg;
  double pad_factor = 3.0;

  // Returns the stray part of the energy and optionally accumulates the
  // gradients; H_out (on bg) is filled for reporting when non-null.
  double energy_and_grad(const GridSpec& g, const Field& eta, const Field& Mt,
                         double mu, Field* gEta, Field* gMt,
                         Field* H_out = nullptr) const;
};

std::shared_ptr<StrayContext> make_stray_context(const Field& eta_ref,
                                                 const GridSpec& g,
                                                 int bg_nodes, double pad_factor,
                                                 double margin_frac = 0.15);

}  // namespace magmove
