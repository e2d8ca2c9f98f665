#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "magmove/common.hpp"

namespace magmove {

// Axis-aligned node lattice. Nodes are stored row-major with the last axis
// fastest; unused axes (for d = 2) have n = 1 and are never iterated.
struct Lattice {
  int d = 3;
  std::array<int, 3> n{1, 1, 1};
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> h{0.0, 0.0, 0.0};

  long nodes() const { return static_cast<long>(n[0]) * n[1] * n[2]; }

  long flat(const std::array<int, 3>& ix) const {
    return (static_cast<long>(ix[0]) * n[1] + ix[1]) * n[2] + ix[2];
  }

  std::array<int, 3> unflat(long f) const {
    std::array<int, 3> ix{0, 0, 0};
    ix[2] = static_cast<int>(f % n[2]);
    f /= n[2];
    ix[1] = static_cast<int>(f % n[1]);
    ix[0] = static_cast<int>(f / n[1]);
    return ix;
  }

  long stride(int ax) const {
    switch (ax) {
      case 0: return static_cast<long>(n[1]) * n[2];
      case 1: return n[2];
      default: return 1;
    }
  }

  void pos(const std::array<int, 3>& ix, double* x) const {
    for (int a = 0; a < d; ++a) x[a] = lo[a] + ix[a] * h[a];
  }

  double extent(int ax) const { return h[ax] * (n[ax] - 1); }
};

enum class NodeClass : std::uint8_t {
  Interior = 0,
  Dirichlet = 1,  // boundary part P: deformation frozen to its initial trace
  Free = 2,       // boundary part N
};

// Reference-domain grid: lattice + boundary partition + quadrature weights.
struct GridSpec {
  Lattice lat;
  std::vector<NodeClass> label;
  std::vector<double> qw;  // trapezoidal product weights, one per node
  std::string dirichlet_preset;

  int d() const { return lat.d; }
  long nodes() const { return lat.nodes(); }

  bool is_boundary(long f) const { return label[f] != NodeClass::Interior; }
  bool is_dirichlet(long f) const { return label[f] == NodeClass::Dirichlet; }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < lat.d; ++a) v *= lat.extent(a);
    return v;
  }
};

// dirichlet: "xd=0" pins the boundary face where the last axis equals its
// lower end, "x1=0" the first axis, "all" the whole boundary.
GridSpec make_grid(int d, int n, std::array<double, 2> extent = {0.0, 1.0},
                   const std::string& dirichlet = "xd=0");

// Trapezoidal product weights for an arbitrary lattice.
std::vector<double> trapezoid_weights(const Lattice& lat);

}  // namespace magmove
