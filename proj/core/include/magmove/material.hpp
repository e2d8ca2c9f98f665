#pragma once

#include <array>
#include <string>
#include <vector>

#include "magmove/common.hpp"

namespace magmove {

// All model constants. The extra *_weight knobs scale individual energy terms
// so reduced variants (e.g. the fully quadratic configuration used by the
// linear-solve cross-checks) can be expressed without touching the code paths.
struct MaterialParams {
  double a = 13.0;        // determinant-penalty exponent
  double q = 4.0;         // second-gradient exponent
  double exchange_A = 1.0;
  double beta = 1.0;      // saturation penalty scale
  double nu = 1.0;        // viscosity
  double mu = 1.0;        // permeability
  double rho = 1.0;       // density
  double mu_e = 1.0;      // coefficient of the default quadratic stored energy
  double K = 1.0;         // anisotropy coefficient
  std::array<double, 3> easy_axis{0.0, 0.0, 1.0};
  double p1 = 2.0, p2 = 2.0, p3 = 2.0, p4 = 1.0;  // declared growth exponents
  bool stray_field = false;
  double det_floor = 1e-6;
  bool override_growth = false;

  double det_penalty_weight = 1.0;
  double hessian_weight = 1.0;
  double saturation_weight = 1.0;

  // Throws ConfigError on hard violations; appends override warnings.
  void validate(std::vector<std::string>* warnings = nullptr) const;
};

}  // namespace magmove
