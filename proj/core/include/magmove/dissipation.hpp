#pragma once

#include "magmove/kinematics.hpp"
#include "magmove/material.hpp"

namespace magmove {

// Deformation/magnetization rates of one time step.
struct RatePair {
  Field deta;  // must vanish on Dirichlet nodes
  Field dMt;
};

// Lagrangian dissipation potential, evaluated at the previous step's geometry:
// int nu |grad(deta) F^{-1}|^2 det + (1/2)|dMt|^2 / det dX.
double dissipation_rate(const KinematicState& ref, const RatePair& rates,
                        const GridSpec& g, const MaterialParams& p);

// Gradients with respect to the two rates (the potential is quadratic and
// cross-independent: each gradient ignores the other rate).
void grad_dissipation(const KinematicState& ref, const RatePair& rates,
                      const GridSpec& g, const MaterialParams& p, Field& g_deta,
                      Field& g_dMt);

// Cross-check in the current configuration: int nu |grad_x v|^2 + (1/2)|DtM|^2
// over the covered part of the background grid.
double eulerian_dissipation(const EulerianField& v, const EulerianField& DtM,
                            const BackgroundGrid& bg, const MaterialParams& p);

}  // namespace magmove
