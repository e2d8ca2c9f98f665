#include "magmove/field.hpp"

namespace magmove {

Field identity_deformation(const GridSpec& g) {
  Field f = make_field(g.lat, g.d());
  std::array<int, 3> ix{};
  for (long n = 0; n < g.nodes(); ++n) {
    ix = g.lat.unflat(n);
    g.lat.pos(ix, f.at(n));
  }
  return f;
}

Field constant_field(const Lattice& lat, const double* value, int comps) {
  Field f = make_field(lat, comps);
  for (long n = 0; n < lat.nodes(); ++n)
    for (int c = 0; c < comps; ++c) f.at(n)[c] = value[c];
  return f;
}

}  // namespace magmove
