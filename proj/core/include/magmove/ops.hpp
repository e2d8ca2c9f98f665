#pragma once

#include "magmove/field.hpp"
#include "magmove/grid.hpp"

namespace magmove {

// Discrete differential operators on the node lattice: central differences at
// interior nodes, second-order one-sided stencils at the ends. All operators
// are exact on per-axis quadratic polynomials, and each has an exact adjoint
// (the transpose of the same stencil map) so energy gradients can be assembled
// by back-propagating per-node cotangents.

// d/dx_ax applied to every component of f.
Field deriv_axis(const Lattice& lat, const Field& f, int ax);
Field deriv_axis_adjoint(const Lattice& lat, const Field& f, int ax);

// Gradient of a C-component field: output component layout [c*d + ax].
Field gradient(const Lattice& lat, const Field& f);
// Adjoint of gradient: input [c*d + ax] -> output C components.
Field gradient_adjoint(const Lattice& lat, const Field& f);

// Hessian as the composition gradient(gradient(f)); layout [(c*d + i)*d + j]
// holds d/dx_j d/dx_i f_c. Exact on quadratics, mixed entries symmetric.
Field hessian(const Lattice& lat, const Field& f);
Field hessian_adjoint(const Lattice& lat, const Field& f);

// Trapezoidal product quadrature of a scalar field.
double integrate(const GridSpec& g, const Field& f);
double integrate(const Lattice& lat, const std::vector<double>& weights,
                 const Field& f);

// Weighted L2 norm over the grid: sqrt(sum_n qw_n |f_n|^2).
double l2_norm(const GridSpec& g, const Field& f);
// Plain Euclidean norm of the value array.
double flat_norm(const Field& f);

}  // namespace magmove
