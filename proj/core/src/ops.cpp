#include "magmove/ops.hpp"

#include <cmath>

namespace magmove {

namespace {

// One-dimensional stencil at position i of an n-node line: up to 3 taps.
struct Stencil {
  long off[3];
  double c[3];
  int taps;
};

inline Stencil axis_stencil(int i, int n, long s, double invh) {
  Stencil st{};
  if (i == 0) {
    st.off[0] = 0;
    st.off[1] = s;
    st.off[2] = 2 * s;
    st.c[0] = -1.5 * invh;
    st.c[1] = 2.0 * invh;
    st.c[2] = -0.5 * invh;
    st.taps = 3;
  } else if (i == n - 1) {
    st.off[0] = 0;
    st.off[1] = -s;
    st.off[2] = -2 * s;
    st.c[0] = 1.5 * invh;
    st.c[1] = -2.0 * invh;
    st.c[2] = 0.5 * invh;
    st.taps = 3;
  } else {
    st.off[0] = s;
    st.off[1] = -s;
    st.c[0] = 0.5 * invh;
    st.c[1] = -0.5 * invh;
    st.taps = 2;
  }
  return st;
}

Field apply_deriv(const Lattice& lat, const Field& f, int ax, bool adjoint) {
  if (ax < 0 || ax >= lat.d) throw ContractError("derivative axis out of range");
  if (f.nodes() != lat.nodes()) throw ContractError("field/lattice node mismatch");
  const int C = f.comps;
  Field out = make_field(lat, C);
  const long s = lat.stride(ax);
  const double invh = 1.0 / lat.h[ax];
  const int nax = lat.n[ax];

  std::array<int, 3> ix{0, 0, 0};
  const long N = lat.nodes();
  for (long fl = 0; fl < N; ++fl) {
    ix = lat.unflat(fl);
    Stencil st = axis_stencil(ix[ax], nax, s, invh);
    for (int t = 0; t < st.taps; ++t) {
      const long src = fl + st.off[t];
      for (int c = 0; c < C; ++c) {
        if (!adjoint)
          out.v[fl * C + c] += st.c[t] * f.v[src * C + c];
        else
          out.v[src * C + c] += st.c[t] * f.v[fl * C + c];
      }
    }
  }
  return out;
}

}  // namespace

Field deriv_axis(const Lattice& lat, const Field& f, int ax) {
  return apply_deriv(lat, f, ax, false);
}

Field deriv_axis_adjoint(const Lattice& lat, const Field& f, int ax) {
  return apply_deriv(lat, f, ax, true);
}

Field gradient(const Lattice& lat, const Field& f) {
  const int C = f.comps;
  const int d = lat.d;
  Field out = make_field(lat, C * d);
  for (int ax = 0; ax < d; ++ax) {
    Field dax = deriv_axis(lat, f, ax);
    const long N = lat.nodes();
    for (long n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        out.v[n * C * d + c * d + ax] = dax.v[n * C + c];
  }
  return out;
}

Field gradient_adjoint(const Lattice& lat, const Field& f) {
  const int d = lat.d;
  if (f.comps % d != 0) throw ContractError("gradient_adjoint: bad component count");
  const int C = f.comps / d;
  Field out = make_field(lat, C);
  Field slice = make_field(lat, C);
  const long N = lat.nodes();
  for (int ax = 0; ax < d; ++ax) {
    for (long n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        slice.v[n * C + c] = f.v[n * C * d + c * d + ax];
    Field adj = deriv_axis_adjoint(lat, slice, ax);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += adj.v[i];
  }
  return out;
}

Field hessian(const Lattice& lat, const Field& f) {
  if (lat.n[0] < 3) throw ConfigError("unsupported grid: hessian needs n >= 3");
  return gradient(lat, gradient(lat, f));
}

Field hessian_adjoint(const Lattice& lat, const Field& f) {
  return gradient_adjoint(lat, gradient_adjoint(lat, f));
}

double integrate(const Lattice& lat, const std::vector<double>& weights,
                 const Field& f) {
  if (f.comps != 1) throw ContractError("integrate expects a scalar field");
  if (f.nodes() != lat.nodes()) throw ContractError("integrate: shape mismatch");
  double s = 0.0;
  const long N = lat.nodes();
  for (long n = 0; n < N; ++n) s += weights[n] * f.v[n];
  return s;
}

double integrate(const GridSpec& g, const Field& f) {
  return integrate(g.lat, g.qw, f);
}

double l2_norm(const GridSpec& g, const Field& f) {
  double s = 0.0;
  const long N = g.nodes();
  for (long n = 0; n < N; ++n) {
    const double* x = f.at(n);
    double a = 0.0;
    for (int c = 0; c < f.comps; ++c) a += x[c] * x[c];
    s += g.qw[n] * a;
  }
  return std::sqrt(s);
}

double flat_norm(const Field& f) {
  double s = 0.0;
  for (double x : f.v) s += x * x;
  return std::sqrt(s);
}

}  // namespace magmove
