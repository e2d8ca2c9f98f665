#include "magmove/grid.hpp"

namespace magmove {

std::vector<double> trapezoid_weights(const Lattice& lat) {
  std::vector<double> w(lat.nodes(), 1.0);
  std::array<int, 3> ix{0, 0, 0};
  for (long f = 0; f < lat.nodes(); ++f) {
    ix = lat.unflat(f);
    double wn = 1.0;
    for (int a = 0; a < lat.d; ++a) {
      double wa = lat.h[a];
      if (ix[a] == 0 || ix[a] == lat.n[a] - 1) wa *= 0.5;
      wn *= wa;
    }
    w[f] = wn;
  }
  return w;
}

GridSpec make_grid(int d, int n, std::array<double, 2> extent,
                   const std::string& dirichlet) {
  if (d != 2 && d != 3) throw ConfigError("grid dimension must be 2 or 3");
  if (n < 3) throw ConfigError("unsupported grid: need at least 3 nodes per axis");
  if (!(extent[1] > extent[0])) throw ConfigError("grid extent must be increasing");

  GridSpec g;
  g.lat.d = d;
  for (int a = 0; a < d; ++a) {
    g.lat.n[a] = n;
    g.lat.lo[a] = extent[0];
    g.lat.h[a] = (extent[1] - extent[0]) / (n - 1);
  }
  g.dirichlet_preset = dirichlet;
  g.label.assign(g.lat.nodes(), NodeClass::Interior);
  g.qw = trapezoid_weights(g.lat);

  long n_dirichlet = 0;
  for (long f = 0; f < g.lat.nodes(); ++f) {
    auto ix = g.lat.unflat(f);
    bool boundary = false;
    for (int a = 0; a < d; ++a)
      boundary = boundary || ix[a] == 0 || ix[a] == g.lat.n[a] - 1;
    if (!boundary) continue;

    bool pinned;
    if (dirichlet == "all")
      pinned = true;
    else if (dirichlet == "xd=0")
      pinned = ix[d - 1] == 0;
    else if (dirichlet == "x1=0")
      pinned = ix[0] == 0;
    else
      throw ConfigError("unknown dirichlet preset: " + dirichlet);
    g.label[f] = pinned ? NodeClass::Dirichlet : NodeClass::Free;
    if (pinned) ++n_dirichlet;
  }
  if (n_dirichlet == 0)
    throw ConfigError("dirichlet part of the boundary must be nonempty");
  return g;
}

}  // namespace magmove
