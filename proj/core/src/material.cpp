#include "magmove/material.hpp"

#include <cmath>

namespace magmove {

void MaterialParams::validate(std::vector<std::string>* warnings) const {
  auto fail_or_warn = [&](const std::string& msg) {
    if (!override_growth) throw ConfigError(msg);
    if (warnings) warnings->push_back("override: " + msg);
  };

  if (!(q > 3.0))
    fail_or_warn("second-gradient exponent q must exceed 3 (q=" +
                 std::to_string(q) + ")");
  if (q > 3.0 && !(a > 3.0 * q / (q - 3.0)))
    fail_or_warn("determinant exponent a must exceed 3q/(q-3)=" +
                 std::to_string(3.0 * q / (q - 3.0)) + " (a=" +
                 std::to_string(a) + ")");

  if (!(p1 >= 2.0)) throw ConfigError("growth exponent p1 must be >= 2");
  if (!(p2 >= 1.0)) throw ConfigError("growth exponent p2 must be >= 1");
  if (!(p3 >= 1.0 && p3 < 6.0)) throw ConfigError("growth exponent p3 must lie in [1,6)");
  if (!(p4 >= 1.0 && p4 < 5.0)) throw ConfigError("growth exponent p4 must lie in [1,5)");

  if (!(exchange_A >= 0.0)) throw ConfigError("exchange stiffness must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("saturation scale beta must be > 0");
  if (!(nu > 0.0)) throw ConfigError("viscosity nu must be > 0");
  if (!(mu > 0.0)) throw ConfigError("permeability mu must be > 0");
  if (!(rho > 0.0)) throw ConfigError("density rho must be > 0");
  if (!(mu_e > 0.0)) throw ConfigError("elastic coefficient mu_e must be > 0");
  if (!(K >= 0.0)) throw ConfigError("anisotropy coefficient K must be >= 0");
  if (!(det_floor > 0.0)) throw ConfigError("determinant floor must be > 0");

  double n2 = easy_axis[0] * easy_axis[0] + easy_axis[1] * easy_axis[1] +
              easy_axis[2] * easy_axis[2];
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-8)
    throw ConfigError("easy axis must be a unit vector");

  if (det_penalty_weight < 0.0 || hessian_weight < 0.0 || saturation_weight < 0.0)
    throw ConfigError("term weights must be >= 0");
}

}  // namespace magmove
