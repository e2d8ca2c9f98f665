#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "magmove/grid.hpp"

namespace magmove {

// Flat nodal value array; components of one node are contiguous.
struct Field {
  int comps = 1;
  std::vector<double> v;

  double* at(long node) { return v.data() + static_cast<std::size_t>(node) * comps; }
  const double* at(long node) const {
    return v.data() + static_cast<std::size_t>(node) * comps;
  }
  long nodes() const { return comps ? static_cast<long>(v.size()) / comps : 0; }
};

inline Field make_field(const Lattice& lat, int comps) {
  Field f;
  f.comps = comps;
  f.v.assign(static_cast<std::size_t>(lat.nodes()) * comps, 0.0);
  return f;
}

inline bool all_finite(const Field& f) {
  for (double x : f.v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void check_conforming(const Field& f, const Lattice& lat, int comps,
                             const char* what) {
  if (f.comps != comps ||
      f.v.size() != static_cast<std::size_t>(lat.nodes()) * comps)
    throw ContractError(std::string("field shape mismatch: ") + what);
}

// Identity deformation field on a grid.
Field identity_deformation(const GridSpec& g);

// Constant vector field.
Field constant_field(const Lattice& lat, const double* value, int comps);

}  // namespace magmove
