#include "magmove/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "magmove/ops.hpp"
#include "magmove/smallmat.hpp"

namespace magmove {

KinematicState build_kinematics(const Field& eta, const GridSpec& g) {
  const int d = g.d();
  check_conforming(eta, g.lat, d, "deformation");
  KinematicState s;
  s.F = gradient(g.lat, eta);
  s.det = make_field(g.lat, 1);
  s.cof = make_field(g.lat, d * d);
  s.Finv = make_field(g.lat, d * d);
  s.min_det = std::numeric_limits<double>::infinity();
  const long N = g.nodes();
  for (long n = 0; n < N; ++n) {
    const double* F = s.F.at(n);
    double det = mdet(F, d);
    s.det.v[n] = det;
    mcof(F, d, s.cof.at(n));
    s.min_det = std::min(s.min_det, det);
    double* Fi = s.Finv.at(n);
    if (det > 0.0) {
      // F^{-1} = cof^T / det
      const double* C = s.cof.at(n);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Fi[i * d + j] = C[j * d + i] / det;
    } else {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Fi[i * d + j] = (i == j) ? 1.0 : 0.0;
    }
  }
  s.orientation_ok = s.min_det > 0.0;
  return s;
}

BackgroundGrid make_background_grid(const Field& eta, int d, int nodes_per_axis,
                                    double margin_frac) {
  if (nodes_per_axis < 3) throw ConfigError("background grid needs >= 3 nodes");
  double lo[3], hi[3];
  for (int a = 0; a < d; ++a) {
    lo[a] = std::numeric_limits<double>::infinity();
    hi[a] = -std::numeric_limits<double>::infinity();
  }
  const long N = eta.nodes();
  for (long n = 0; n < N; ++n) {
    const double* y = eta.at(n);
    for (int a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], y[a]);
      hi[a] = std::max(hi[a], y[a]);
    }
  }
  double diam = 0.0;
  for (int a = 0; a < d; ++a) diam = std::max(diam, hi[a] - lo[a]);
  BackgroundGrid bg;
  bg.lat.d = d;
  for (int a = 0; a < d; ++a) {
    double m = margin_frac * diam;
    bg.lat.lo[a] = lo[a] - m;
    bg.lat.n[a] = nodes_per_axis;
    bg.lat.h[a] = (hi[a] - lo[a] + 2.0 * m) / (nodes_per_axis - 1);
  }
  return bg;
}

bool sample_multilinear(const Lattice& lat, const Field& f, const double* x,
                        double* out) {
  const int d = lat.d;
  const int C = f.comps;
  for (int c = 0; c < C; ++c) out[c] = 0.0;
  int base[3] = {0, 0, 0};
  double t[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    double u = (x[a] - lat.lo[a]) / lat.h[a];
    if (u < -1e-12 || u > lat.n[a] - 1 + 1e-12) return false;
    u = std::clamp(u, 0.0, static_cast<double>(lat.n[a] - 1));
    int i = std::min(static_cast<int>(u), lat.n[a] - 2);
    base[a] = i;
    t[a] = u - i;
  }
  const int corners = 1 << d;
  for (int m = 0; m < corners; ++m) {
    double w = 1.0;
    std::array<int, 3> ix{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      int bit = (m >> a) & 1;
      w *= bit ? t[a] : 1.0 - t[a];
      ix[a] = base[a] + bit;
    }
    const double* v = f.at(lat.flat(ix));
    for (int c = 0; c < C; ++c) out[c] += w * v[c];
  }
  return true;
}

namespace {

inline long cell_flat(const std::array<int, 3>& c, const std::array<int, 3>& cells) {
  return (static_cast<long>(c[0]) * cells[1] + c[1]) * cells[2] + c[2];
}

}  // namespace

DeformedCellLocator::DeformedCellLocator(const GridSpec& g, const Field& eta)
    : g_(g), eta_(eta), d_(g.d()) {
  for (int a = 0; a < 3; ++a) cells_[a] = a < d_ ? g.lat.n[a] - 1 : 1;
  const long nc = static_cast<long>(cells_[0]) * cells_[1] * cells_[2];
  cell_lo_.assign(nc * 3, 0.0);
  cell_hi_.assign(nc * 3, 0.0);

  double glo[3], ghi[3];
  for (int a = 0; a < d_; ++a) {
    glo[a] = std::numeric_limits<double>::infinity();
    ghi[a] = -std::numeric_limits<double>::infinity();
  }
  std::array<int, 3> c{0, 0, 0};
  for (long cf = 0; cf < nc; ++cf) {
    c[2] = static_cast<int>(cf % cells_[2]);
    c[1] = static_cast<int>((cf / cells_[2]) % cells_[1]);
    c[0] = static_cast<int>(cf / (static_cast<long>(cells_[1]) * cells_[2]));
    double* lo = &cell_lo_[cf * 3];
    double* hi = &cell_hi_[cf * 3];
    for (int a = 0; a < d_; ++a) {
      lo[a] = std::numeric_limits<double>::infinity();
      hi[a] = -std::numeric_limits<double>::infinity();
    }
    const int corners = 1 << d_;
    for (int m = 0; m < corners; ++m) {
      std::array<int, 3> ix{0, 0, 0};
      for (int a = 0; a < d_; ++a) ix[a] = c[a] + ((m >> a) & 1);
      const double* y = eta_.at(g_.lat.flat(ix));
      for (int a = 0; a < d_; ++a) {
        lo[a] = std::min(lo[a], y[a]);
        hi[a] = std::max(hi[a], y[a]);
      }
    }
    for (int a = 0; a < d_; ++a) {
      glo[a] = std::min(glo[a], lo[a]);
      ghi[a] = std::max(ghi[a], hi[a]);
    }
  }

  for (int a = 0; a < d_; ++a) {
    bins_[a] = std::max(1, cells_[a]);
    bin_lo_[a] = glo[a];
    double ext = std::max(ghi[a] - glo[a], 1e-300);
    bin_h_[a] = ext / bins_[a] * (1.0 + 1e-12);
  }
  bin_cells_.assign(static_cast<std::size_t>(bins_[0]) * bins_[1] * bins_[2], {});
  for (long cf = 0; cf < nc; ++cf) {
    const double* lo = &cell_lo_[cf * 3];
    const double* hi = &cell_hi_[cf * 3];
    int b0[3] = {0, 0, 0}, b1[3] = {0, 0, 0};
    for (int a = 0; a < d_; ++a) {
      b0[a] = std::clamp(static_cast<int>((lo[a] - bin_lo_[a]) / bin_h_[a]), 0,
                         bins_[a] - 1);
      b1[a] = std::clamp(static_cast<int>((hi[a] - bin_lo_[a]) / bin_h_[a]), 0,
                         bins_[a] - 1);
    }
    for (int i = b0[0]; i <= b1[0]; ++i)
      for (int j = (d_ > 1 ? b0[1] : 0); j <= (d_ > 1 ? b1[1] : 0); ++j)
        for (int k = (d_ > 2 ? b0[2] : 0); k <= (d_ > 2 ? b1[2] : 0); ++k)
          bin_cells_[(static_cast<std::size_t>(i) * bins_[1] + j) * bins_[2] + k]
              .push_back(static_cast<int>(cf));
  }
}

void DeformedCellLocator::bbox(double* lo, double* hi) const {
  for (int a = 0; a < d_; ++a) {
    lo[a] = bin_lo_[a];
    hi[a] = bin_lo_[a] + bin_h_[a] * bins_[a];
  }
}

bool DeformedCellLocator::invert_in_cell(long cell, const double* x,
                                         double* X) const {
  const int d = d_;
  std::array<int, 3> c{0, 0, 0};
  c[2] = static_cast<int>(cell % cells_[2]);
  c[1] = static_cast<int>((cell / cells_[2]) % cells_[1]);
  c[0] = static_cast<int>(cell / (static_cast<long>(cells_[1]) * cells_[2]));

  const int corners = 1 << d;
  const double* y[8];
  for (int m = 0; m < corners; ++m) {
    std::array<int, 3> ix{0, 0, 0};
    for (int a = 0; a < d; ++a) ix[a] = c[a] + ((m >> a) & 1);
    y[m] = eta_.at(g_.lat.flat(ix));
  }

  double scale = 0.0;
  for (int a = 0; a < d; ++a)
    scale = std::max(scale, cell_hi_[cell * 3 + a] - cell_lo_[cell * 3 + a]);
  const double tol = 1e-12 * std::max(scale, 1e-30);

  double xi[3] = {0.5, 0.5, 0.5};
  for (int it = 0; it < 20; ++it) {
    double r[3] = {0.0, 0.0, 0.0};
    double J[9] = {0.0};
    for (int m = 0; m < corners; ++m) {
      double w = 1.0;
      for (int a = 0; a < d; ++a) w *= ((m >> a) & 1) ? xi[a] : 1.0 - xi[a];
      for (int a = 0; a < d; ++a) r[a] += w * y[m][a];
      for (int a = 0; a < d; ++a) {
        double dw = ((m >> a) & 1) ? 1.0 : -1.0;
        for (int b = 0; b < d; ++b)
          if (b != a) dw *= ((m >> b) & 1) ? xi[b] : 1.0 - xi[b];
        for (int i = 0; i < d; ++i) J[i * d + a] += dw * y[m][i];
      }
    }
    for (int a = 0; a < d; ++a) r[a] -= x[a];
    double rn = vnorm(r, d);
    if (rn <= tol) {
      for (int a = 0; a < d; ++a)
        if (xi[a] < -1e-9 || xi[a] > 1.0 + 1e-9) return false;
      for (int a = 0; a < d; ++a)
        X[a] = g_.lat.lo[a] + (c[a] + std::clamp(xi[a], 0.0, 1.0)) * g_.lat.h[a];
      return true;
    }
    double Jinv[9];
    if (std::abs(mdet(J, d)) < 1e-300) return false;
    minv(J, d, Jinv);
    double dxi[3];
    mvec(Jinv, r, d, dxi);
    for (int a = 0; a < d; ++a) xi[a] -= dxi[a];
    // keep the iterate near the cell; multilinear extension is fine slightly
    // outside but wandering far means the point belongs to another cell
    for (int a = 0; a < d; ++a) xi[a] = std::clamp(xi[a], -0.5, 1.5);
  }
  return false;
}

bool DeformedCellLocator::invert(const double* x, double* X) const {
  int b[3] = {0, 0, 0};
  for (int a = 0; a < d_; ++a) {
    double u = (x[a] - bin_lo_[a]) / bin_h_[a];
    if (u < 0.0 || u >= bins_[a] + 1e-9) return false;
    b[a] = std::clamp(static_cast<int>(u), 0, bins_[a] - 1);
  }
  const auto& cand =
      bin_cells_[(static_cast<std::size_t>(b[0]) * bins_[1] + b[1]) * bins_[2] +
                 b[2]];
  for (int cf : cand) {
    const double* lo = &cell_lo_[static_cast<long>(cf) * 3];
    const double* hi = &cell_hi_[static_cast<long>(cf) * 3];
    bool inside = true;
    for (int a = 0; a < d_; ++a)
      inside = inside && x[a] >= lo[a] - 1e-12 && x[a] <= hi[a] + 1e-12;
    if (inside && invert_in_cell(cf, x, X)) return true;
  }
  return false;
}

EulerianField push_forward_magnetization(const Field& Mt, const Field& eta,
                                         const KinematicState& state,
                                         const GridSpec& g,
                                         const BackgroundGrid& bg) {
  const int d = g.d();
  check_conforming(Mt, g.lat, d, "magnetization");
  if (!state.orientation_ok)
    throw AdmissibilityError("push-forward requires an orientation-preserving map");
  DeformedCellLocator loc(g, eta);
  EulerianField out;
  out.f = make_field(bg.lat, d);
  out.covered.assign(bg.lat.nodes(), 0);
  std::array<int, 3> ix{};
  double x[3], X[3], Mtv[3], detv;
  for (long n = 0; n < bg.lat.nodes(); ++n) {
    ix = bg.lat.unflat(n);
    bg.lat.pos(ix, x);
    if (!loc.invert(x, X)) continue;
    Field const* fdet = &state.det;
    if (!sample_multilinear(g.lat, Mt, X, Mtv)) continue;
    if (!sample_multilinear(g.lat, *fdet, X, &detv)) continue;
    if (detv <= 0.0) continue;
    for (int a = 0; a < d; ++a) out.f.at(n)[a] = Mtv[a] / detv;
    out.covered[n] = 1;
  }
  return out;
}

Field pull_back_magnetization(const Field& M, const BackgroundGrid& bg,
                              const Field& eta, const KinematicState& state,
                              const GridSpec& g) {
  const int d = g.d();
  if (!state.orientation_ok)
    throw AdmissibilityError("pull-back requires an orientation-preserving map");
  Field Mt = make_field(g.lat, d);
  double Mv[3];
  for (long n = 0; n < g.nodes(); ++n) {
    const double* y = eta.at(n);
    if (!sample_multilinear(bg.lat, M, y, Mv)) continue;  // zero outside
    double det = state.det.v[n];
    for (int a = 0; a < d; ++a) Mt.at(n)[a] = det * Mv[a];
  }
  return Mt;
}

EulerianField eulerian_velocity(const Field& eta, const Field& deta,
                                const KinematicState& state, const GridSpec& g,
                                const BackgroundGrid& bg) {
  const int d = g.d();
  check_conforming(deta, g.lat, d, "deformation rate");
  if (!state.orientation_ok)
    throw AdmissibilityError("velocity rasterization requires min det > 0");
  DeformedCellLocator loc(g, eta);
  EulerianField out;
  out.f = make_field(bg.lat, d);
  out.covered.assign(bg.lat.nodes(), 0);
  std::array<int, 3> ix{};
  double x[3], X[3], vv[3];
  for (long n = 0; n < bg.lat.nodes(); ++n) {
    ix = bg.lat.unflat(n);
    bg.lat.pos(ix, x);
    if (!loc.invert(x, X)) continue;
    if (!sample_multilinear(g.lat, deta, X, vv)) continue;
    for (int a = 0; a < d; ++a) out.f.at(n)[a] = vv[a];
    out.covered[n] = 1;
  }
  return out;
}

Field material_derivative(const Field& M0, const Field& M1, const Field& v,
                          double dt, const BackgroundGrid& bg) {
  const int d = bg.lat.d;
  if (M0.v.size() != M1.v.size() || M0.comps != M1.comps || v.comps != d ||
      M1.nodes() != bg.lat.nodes() || v.nodes() != bg.lat.nodes())
    throw ContractError("material_derivative: background grid mismatch");
  Field gM = gradient(bg.lat, M1);
  Field gv = gradient(bg.lat, v);
  Field out = make_field(bg.lat, d);
  for (long n = 0; n < bg.lat.nodes(); ++n) {
    const double* vm = v.at(n);
    double divv = 0.0;
    for (int i = 0; i < d; ++i) divv += gv.at(n)[i * d + i];
    for (int a = 0; a < d; ++a) {
      double adv = 0.0;
      for (int i = 0; i < d; ++i) adv += vm[i] * gM.at(n)[a * d + i];
      out.at(n)[a] = (M1.at(n)[a] - M0.at(n)[a]) / dt + adv + divv * M1.at(n)[a];
    }
  }
  return out;
}

double deformed_surface_area(const KinematicState& state, const GridSpec& g) {
  const int d = g.d();
  double area = 0.0;
  // one face per (axis, side); integrate |cof(F) . N| with the (d-1)-dim
  // trapezoid rule over the in-face axes
  for (int ax = 0; ax < d; ++ax) {
    for (int side = 0; side < 2; ++side) {
      std::array<int, 3> ix{0, 0, 0};
      ix[ax] = side == 0 ? 0 : g.lat.n[ax] - 1;
      // iterate the remaining axes
      int oa[2], no = 0;
      for (int a = 0; a < d; ++a)
        if (a != ax) oa[no++] = a;
      int n0 = g.lat.n[oa[0]];
      int n1 = no > 1 ? g.lat.n[oa[1]] : 1;
      for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
          ix[oa[0]] = i;
          if (no > 1) ix[oa[1]] = j;
          double w = (i == 0 || i == n0 - 1 ? 0.5 : 1.0) * g.lat.h[oa[0]];
          if (no > 1) w *= (j == 0 || j == n1 - 1 ? 0.5 : 1.0) * g.lat.h[oa[1]];
          const double* C = state.cof.at(g.lat.flat(ix));
          double cn[3];
          for (int r = 0; r < d; ++r) cn[r] = C[r * d + ax];  // cof . e_ax
          area += w * vnorm(cn, d);
        }
    }
  }
  return area;
}

CiarletNecasReport ciarlet_necas_residual(const Field& eta,
                                          const KinematicState& state,
                                          const GridSpec& g,
                                          int bg_nodes_per_axis) {
  const int d = g.d();
  CiarletNecasReport rep;
  rep.det_integral = integrate(g, state.det);

  BackgroundGrid bg = make_background_grid(eta, d, bg_nodes_per_axis, 0.02);
  DeformedCellLocator loc(g, eta);
  const double hv = bg.cell_volume();
  long covered = 0;
  // count cell centers covered at least once
  std::array<int, 3> cells{1, 1, 1};
  for (int a = 0; a < d; ++a) cells[a] = bg.lat.n[a] - 1;
  const long nc = static_cast<long>(cells[0]) * cells[1] * cells[2];
  double x[3], X[3];
  for (long cf = 0; cf < nc; ++cf) {
    std::array<int, 3> c{0, 0, 0};
    c[2] = static_cast<int>(cf % cells[2]);
    c[1] = static_cast<int>((cf / cells[2]) % cells[1]);
    c[0] = static_cast<int>(cf / (static_cast<long>(cells[1]) * cells[2]));
    for (int a = 0; a < d; ++a) x[a] = bg.lat.lo[a] + (c[a] + 0.5) * bg.lat.h[a];
    if (loc.invert(x, X)) ++covered;
  }
  rep.image_volume = covered * hv;
  rep.residual = std::abs(rep.image_volume - rep.det_integral);
  double hb = 0.0;
  for (int a = 0; a < d; ++a) hb = std::max(hb, bg.lat.h[a]);
  rep.tolerance = 2.0 * hb * deformed_surface_area(state, g);
  rep.ok = rep.residual <= rep.tolerance;
  return rep;
}

InjectivityReport boundary_injectivity_margin(const Field& eta, const GridSpec& g,
                                              double delta) {
  const int d = g.d();
  double hmin = g.lat.h[0];
  for (int a = 1; a < d; ++a) hmin = std::min(hmin, g.lat.h[a]);
  if (delta <= 0.0) delta = 4.0 * hmin;

  std::vector<long> bnodes;
  for (long n = 0; n < g.nodes(); ++n)
    if (g.is_boundary(n)) bnodes.push_back(n);

  std::vector<std::array<double, 3>> X(bnodes.size());
  for (std::size_t i = 0; i < bnodes.size(); ++i) {
    auto ix = g.lat.unflat(bnodes[i]);
    g.lat.pos(ix, X[i].data());
  }

  InjectivityReport rep;
  rep.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bnodes.size(); ++i) {
    for (std::size_t j = i + 1; j < bnodes.size(); ++j) {
      double dr = 0.0;
      for (int a = 0; a < d; ++a) {
        double t = X[i][a] - X[j][a];
        dr += t * t;
      }
      if (dr < delta * delta) continue;
      const double* yi = eta.at(bnodes[i]);
      const double* yj = eta.at(bnodes[j]);
      double dy = 0.0;
      for (int a = 0; a < d; ++a) {
        double t = yi[a] - yj[a];
        dy += t * t;
      }
      rep.margin = std::min(rep.margin, std::sqrt(dy));
    }
  }
  if (!std::isfinite(rep.margin)) rep.margin = 0.0;  // degenerate: no pairs
  rep.ok = rep.margin > 0.0;
  return rep;
}

}  // namespace magmove
