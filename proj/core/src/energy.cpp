#include "magmove/energy.hpp"

#include <cmath>
#include <random>

#include "magmove/ops.hpp"
#include "magmove/smallmat.hpp"

namespace magmove {

double QuadraticElasticLaw::value(const double* F, int d) const {
  return 0.5 * mu_e * vdot(F, F, d * d);
}

void QuadraticElasticLaw::dF(const double* F, int d, double* out) const {
  for (int i = 0; i < d * d; ++i) out[i] = mu_e * F[i];
}

double UniaxialAnisotropyLaw::value(const double* F, const double* Mt,
                                    int d) const {
  double Fa[3], r[3];
  mvec(F, axis.data(), d, Fa);
  for (int a = 0; a < d; ++a) r[a] = Mt[a] - Fa[a];
  return K * vdot(r, r, d);
}

void UniaxialAnisotropyLaw::dF(const double* F, const double* Mt, int d,
                               double* out) const {
  double Fa[3], r[3];
  mvec(F, axis.data(), d, Fa);
  for (int a = 0; a < d; ++a) r[a] = Mt[a] - Fa[a];
  // d/dF K|Mt - F a|^2 = -2K (Mt - F a) (x) a
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i * d + j] = -2.0 * K * r[i] * axis[j];
}

void UniaxialAnisotropyLaw::dM(const double* F, const double* Mt, int d,
                               double* out) const {
  double Fa[3];
  mvec(F, axis.data(), d, Fa);
  for (int a = 0; a < d; ++a) out[a] = 2.0 * K * (Mt[a] - Fa[a]);
}

EnergyModel::EnergyModel(const GridSpec& g, const MaterialParams& params,
                         std::shared_ptr<const StrayContext> stray)
    : g_(g), p_(params), stray_(std::move(stray)) {
  w_ = std::make_shared<QuadraticElasticLaw>(p_.mu_e);
  psi_ = std::make_shared<UniaxialAnisotropyLaw>(p_.K, p_.easy_axis);
}

void EnergyModel::set_laws(std::shared_ptr<const ElasticLaw> w,
                           std::shared_ptr<const AnisotropyLaw> psi) {
  if (w) w_ = std::move(w);
  if (psi) psi_ = std::move(psi);
}

EnergyBreakdown EnergyModel::value(const Field& eta, const Field& Mt) const {
  return assemble(eta, Mt, nullptr, nullptr);
}

EnergyBreakdown EnergyModel::value_and_grad(const Field& eta, const Field& Mt,
                                            Field& gEta, Field& gMt) const {
  return assemble(eta, Mt, &gEta, &gMt);
}

EnergyBreakdown EnergyModel::assemble(const Field& eta, const Field& Mt,
                                      Field* gEta, Field* gMt) const {
  const int d = g_.d();
  check_conforming(eta, g_.lat, d, "deformation");
  check_conforming(Mt, g_.lat, d, "magnetization");
  const bool want_grad = gEta != nullptr;

  EnergyBreakdown bd;
  KinematicState st = build_kinematics(eta, g_);
  if (!st.orientation_ok) {
    if (want_grad)
      throw ContractError("energy gradient requested at a state with min det <= 0");
    bd.infinite = true;
    return bd;
  }

  Field Hs = gradient(g_.lat, st.F);  // d^3 comps
  Field m = make_field(g_.lat, d);    // Mt / det
  const long N = g_.nodes();
  for (long n = 0; n < N; ++n)
    for (int a = 0; a < d; ++a) m.at(n)[a] = Mt.at(n)[a] / st.det.v[n];
  Field G = gradient(g_.lat, m);  // d^2, layout [a*d + i]

  Field A_F, A_Hs, A_G, c_M;
  std::vector<double> c_det;
  if (want_grad) {
    A_F = make_field(g_.lat, d * d);
    A_Hs = make_field(g_.lat, d * d * d);
    A_G = make_field(g_.lat, d * d);
    c_M = make_field(g_.lat, d);
    c_det.assign(N, 0.0);
  }

  const double sat_c = p_.saturation_weight / (4.0 * p_.beta * p_.beta);
  double tmp[9], tmp2[9];

  for (long n = 0; n < N; ++n) {
    const double w = g_.qw[n];
    const double* F = st.F.at(n);
    const double* Fi = st.Finv.at(n);
    const double det = st.det.v[n];
    const double* Mn = Mt.at(n);

    // stored elastic energy
    bd.W_term += w * w_->value(F, d);
    if (want_grad) {
      w_->dF(F, d, tmp);
      double* AF = A_F.at(n);
      for (int i = 0; i < d * d; ++i) AF[i] += w * tmp[i];
    }

    // determinant penalty
    if (p_.det_penalty_weight != 0.0) {
      double dp = p_.det_penalty_weight * std::pow(det, -p_.a);
      bd.det_penalty += w * dp;
      if (want_grad) c_det[n] += -p_.a * w * dp / det;
    }

    // second-gradient term (1/q)|Hess|^q
    if (p_.hessian_weight != 0.0) {
      const double* H = Hs.at(n);
      double h2 = vdot(H, H, d * d * d);
      double hn = std::sqrt(h2);
      bd.hessian_term += w * p_.hessian_weight * std::pow(hn, p_.q) / p_.q;
      if (want_grad && hn > 0.0) {
        double c = w * p_.hessian_weight * std::pow(hn, p_.q - 2.0);
        double* AH = A_Hs.at(n);
        for (int i = 0; i < d * d * d; ++i) AH[i] += c * H[i];
      }
    }

    // anisotropy
    bd.anisotropy += w * psi_->value(F, Mn, d);
    if (want_grad) {
      psi_->dF(F, Mn, d, tmp);
      double* AF = A_F.at(n);
      for (int i = 0; i < d * d; ++i) AF[i] += w * tmp[i];
      psi_->dM(F, Mn, d, tmp);
      double* cm = c_M.at(n);
      for (int a = 0; a < d; ++a) cm[a] += w * tmp[a];
    }

    // exchange A |grad(m) F^{-1}|^2 det
    if (p_.exchange_A != 0.0) {
      const double* Gm = G.at(n);
      double T[9];
      mmul(Gm, Fi, d, T);
      double t2 = vdot(T, T, d * d);
      bd.exchange += w * p_.exchange_A * t2 * det;
      if (want_grad) {
        const double c = w * 2.0 * p_.exchange_A * det;
        // cotangent to G: c * T F^{-T}
        double* AG = A_G.at(n);
        for (int a = 0; a < d; ++a)
          for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += T[a * d + j] * Fi[i * d + j];
            AG[a * d + i] += c * s;
          }
        // cotangent to F via dF^{-1}: -c * F^{-T} (G^T T) F^{-T}
        for (int p = 0; p < d; ++p)
          for (int qq = 0; qq < d; ++qq) {
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += Gm[a * d + p] * T[a * d + qq];
            tmp[p * d + qq] = s;  // G^T T
          }
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int r = 0; r < d; ++r)
              for (int ss = 0; ss < d; ++ss)
                s += Fi[r * d + i] * tmp[r * d + ss] * Fi[j * d + ss];
            tmp2[i * d + j] = s;
          }
        double* AF = A_F.at(n);
        for (int i = 0; i < d * d; ++i) AF[i] += -c * tmp2[i];
        // direct det factor
        c_det[n] += w * p_.exchange_A * t2;
      }
    }

    // saturation penalty (1/4beta^2)(|m|^2 - 1)^2 det
    if (p_.saturation_weight != 0.0) {
      double M2 = vdot(Mn, Mn, d);
      double s = M2 / (det * det);
      double r = s - 1.0;
      bd.saturation += w * sat_c * r * r * det;
      if (want_grad) {
        double* cm = c_M.at(n);
        for (int a = 0; a < d; ++a) cm[a] += w * sat_c * 4.0 * r * Mn[a] / det;
        c_det[n] += w * sat_c * (r * r - 4.0 * s * r);
      }
    }
  }

  if (want_grad) {
    // back-propagate the exchange cotangent through m = Mt / det
    Field A_m = gradient_adjoint(g_.lat, A_G);
    for (long n = 0; n < N; ++n) {
      const double det = st.det.v[n];
      const double* am = A_m.at(n);
      double* cm = c_M.at(n);
      double amM = 0.0;
      for (int a = 0; a < d; ++a) {
        cm[a] += am[a] / det;
        amM += am[a] * Mt.at(n)[a];
      }
      c_det[n] += -amM / (det * det);
    }
    // fold all det cotangents into F via d(det) = cof : dF
    for (long n = 0; n < N; ++n) {
      const double* C = st.cof.at(n);
      double* AF = A_F.at(n);
      for (int i = 0; i < d * d; ++i) AF[i] += c_det[n] * C[i];
    }
    *gEta = gradient_adjoint(g_.lat, A_F);
    Field gH = hessian_adjoint(g_.lat, A_Hs);
    for (std::size_t i = 0; i < gEta->v.size(); ++i) gEta->v[i] += gH.v[i];
    *gMt = std::move(c_M);
  }

  if (p_.stray_field) {
    if (!stray_)
      throw ContractError("stray field enabled but no stray context provided");
    bd.stray = stray_->energy_and_grad(g_, eta, Mt, p_.mu, gEta, gMt);
  }
  return bd;
}

EnergyBreakdown elastic_energy(const Field& eta, const GridSpec& g,
                               const MaterialParams& p) {
  MaterialParams q = p;
  q.stray_field = false;
  Field zero = make_field(g.lat, g.d());
  EnergyModel em(g, q);
  EnergyBreakdown bd = em.value(eta, zero);
  bd.anisotropy = bd.stray = bd.exchange = bd.saturation = 0.0;
  return bd;
}

EnergyBreakdown magnetic_energy(const Field& eta, const Field& Mt,
                                const GridSpec& g, const MaterialParams& p,
                                std::shared_ptr<const StrayContext> stray) {
  if (p.stray_field && !stray)
    stray = make_stray_context(eta, g, 2 * g.lat.n[0], 3.0);
  EnergyModel em(g, p, std::move(stray));
  EnergyBreakdown bd = em.value(eta, Mt);
  bd.W_term = bd.det_penalty = bd.hessian_term = 0.0;
  return bd;
}

EnergyBreakdown total_energy(const Field& eta, const Field& Mt, const GridSpec& g,
                             const MaterialParams& p,
                             std::shared_ptr<const StrayContext> stray) {
  if (p.stray_field && !stray)
    stray = make_stray_context(eta, g, 2 * g.lat.n[0], 3.0);
  EnergyModel em(g, p, std::move(stray));
  return em.value(eta, Mt);
}

namespace {

Field masked_deformation_grad(const GridSpec& g, Field gEta) {
  for (long n = 0; n < g.nodes(); ++n)
    if (g.is_dirichlet(n))
      for (int a = 0; a < g.d(); ++a) gEta.at(n)[a] = 0.0;
  return gEta;
}

}  // namespace

Field grad_energy_deformation(const Field& eta, const Field& Mt, const GridSpec& g,
                              const MaterialParams& p,
                              std::shared_ptr<const StrayContext> stray) {
  if (p.stray_field && !stray)
    stray = make_stray_context(eta, g, 2 * g.lat.n[0], 3.0);
  EnergyModel em(g, p, std::move(stray));
  Field gEta = make_field(g.lat, g.d());
  Field gMt = make_field(g.lat, g.d());
  em.value_and_grad(eta, Mt, gEta, gMt);
  return masked_deformation_grad(g, std::move(gEta));
}

Field grad_energy_magnetization(const Field& eta, const Field& Mt,
                                const GridSpec& g, const MaterialParams& p,
                                std::shared_ptr<const StrayContext> stray) {
  if (p.stray_field && !stray)
    stray = make_stray_context(eta, g, 2 * g.lat.n[0], 3.0);
  EnergyModel em(g, p, std::move(stray));
  Field gEta = make_field(g.lat, g.d());
  Field gMt = make_field(g.lat, g.d());
  em.value_and_grad(eta, Mt, gEta, gMt);
  return gMt;
}

namespace {

// closest squared distance from p to triangle (a, b, c); Ericson's algorithm
double tri_dist2(const double* p, const double* a, const double* b,
                 const double* c) {
  double ab[3], ac[3], ap[3];
  for (int i = 0; i < 3; ++i) {
    ab[i] = b[i] - a[i];
    ac[i] = c[i] - a[i];
    ap[i] = p[i] - a[i];
  }
  auto dot3 = [](const double* u, const double* v) {
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  };
  double d1 = dot3(ab, ap), d2 = dot3(ac, ap);
  auto dist2_to = [&](double u, double v) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      double q = a[i] + u * ab[i] + v * ac[i] - p[i];
      s += q * q;
    }
    return s;
  };
  if (d1 <= 0.0 && d2 <= 0.0) return dist2_to(0.0, 0.0);
  double bp[3], cp[3];
  for (int i = 0; i < 3; ++i) {
    bp[i] = p[i] - b[i];
    cp[i] = p[i] - c[i];
  }
  double d3 = dot3(ab, bp), d4 = dot3(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return dist2_to(1.0, 0.0);
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
    return dist2_to(d1 / (d1 - d3), 0.0);
  double d5 = dot3(ab, cp), d6 = dot3(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return dist2_to(0.0, 1.0);
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
    return dist2_to(0.0, d2 / (d2 - d6));
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return dist2_to(1.0 - w, w);
  }
  double denom = 1.0 / (va + vb + vc);
  return dist2_to(vb * denom, vc * denom);
}

double seg_dist2(const double* p, const double* a, const double* b) {
  double ab[2] = {b[0] - a[0], b[1] - a[1]};
  double ap[2] = {p[0] - a[0], p[1] - a[1]};
  double t = (ab[0] * ap[0] + ab[1] * ap[1]) /
             std::max(ab[0] * ab[0] + ab[1] * ab[1], 1e-300);
  t = std::clamp(t, 0.0, 1.0);
  double dx = a[0] + t * ab[0] - p[0], dy = a[1] + t * ab[1] - p[1];
  return dx * dx + dy * dy;
}

// symmetric C^2 smoothstep on [-1, 1]; odd around 0 so a flat interface
// carries no quadrature bias
double smooth_heaviside(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double t = 0.5 * (u + 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// boundary facet of the deformed reference surface: simplex vertices in the
// current configuration plus a representative reference point for sampling
struct BoundaryFacet {
  double v[3][3];
  double Xref[3];
};

}  // namespace

double eulerian_energy(const Field& eta, const Field& Mt, const GridSpec& g,
                       const MaterialParams& p, int bg_nodes_per_axis) {
  const int d = g.d();
  if (bg_nodes_per_axis < 4)
    throw ContractError("eulerian quadrature needs >= 4 nodes per axis");
  KinematicState st = build_kinematics(eta, g);
  if (!st.orientation_ok)
    throw AdmissibilityError("eulerian energy needs an orientation-preserving map");

  QuadraticElasticLaw w(p.mu_e);
  UniaxialAnisotropyLaw psi(p.K, p.easy_axis);
  const double sat_c = p.saturation_weight / (4.0 * p.beta * p.beta);

  // nodal Lagrangian energy density; the Eulerian density is its pullback
  // divided by det
  Field Hs = gradient(g.lat, st.F);
  Field m = make_field(g.lat, d);
  for (long n = 0; n < g.nodes(); ++n)
    for (int a = 0; a < d; ++a) m.at(n)[a] = Mt.at(n)[a] / st.det.v[n];
  Field G = gradient(g.lat, m);
  Field dens = make_field(g.lat, 1);
  for (long n = 0; n < g.nodes(); ++n) {
    const double* Fv = st.F.at(n);
    double detv = st.det.v[n];
    double Fiv[9];
    minv(Fv, d, Fiv);
    double e = w.value(Fv, d);
    e += p.det_penalty_weight * std::pow(detv, -p.a);
    e += p.hessian_weight * std::pow(vnorm(Hs.at(n), d * d * d), p.q) / p.q;
    e += psi.value(Fv, Mt.at(n), d);
    double T[9];
    mmul(G.at(n), Fiv, d, T);
    e += p.exchange_A * vdot(T, T, d * d) * detv;
    double s = vdot(Mt.at(n), Mt.at(n), d) / (detv * detv);
    e += sat_c * (s - 1.0) * (s - 1.0) * detv;
    dens.v[n] = e;
  }

  // triangulated (segmented in 2d) deformed boundary
  std::vector<BoundaryFacet> facets;
  {
    std::array<int, 3> nn = g.lat.n;
    auto add_face_cells = [&](int ax, int side) {
      int b_ax = (ax + 1) % d, c_ax = (ax + 2) % d;
      int fix = side == 0 ? 0 : nn[ax] - 1;
      if (d == 2) {
        for (int i = 0; i + 1 < nn[b_ax]; ++i) {
          std::array<int, 3> i0{0, 0, 0}, i1{0, 0, 0};
          i0[ax] = i1[ax] = fix;
          i0[b_ax] = i;
          i1[b_ax] = i + 1;
          BoundaryFacet f{};
          long n0 = g.lat.flat(i0), n1 = g.lat.flat(i1);
          for (int q = 0; q < d; ++q) {
            f.v[0][q] = eta.at(n0)[q];
            f.v[1][q] = eta.at(n1)[q];
          }
          double Xm[3];
          g.lat.pos(i0, Xm);
          Xm[b_ax] += 0.5 * g.lat.h[b_ax];
          for (int q = 0; q < d; ++q) f.Xref[q] = Xm[q];
          facets.push_back(f);
        }
        return;
      }
      for (int i = 0; i + 1 < nn[b_ax]; ++i)
        for (int j = 0; j + 1 < nn[c_ax]; ++j) {
          std::array<int, 3> ix{0, 0, 0};
          ix[ax] = fix;
          long nid[4];
          double vx[4][3];
          int di[4] = {0, 1, 1, 0}, dj[4] = {0, 0, 1, 1};
          for (int k = 0; k < 4; ++k) {
            ix[b_ax] = i + di[k];
            ix[c_ax] = j + dj[k];
            nid[k] = g.lat.flat(ix);
            for (int q = 0; q < 3; ++q) vx[k][q] = eta.at(nid[k])[q];
          }
          double Xm[3];
          ix[b_ax] = i;
          ix[c_ax] = j;
          g.lat.pos(ix, Xm);
          Xm[b_ax] += 0.5 * g.lat.h[b_ax];
          Xm[c_ax] += 0.5 * g.lat.h[c_ax];
          int tri[2][3] = {{0, 1, 2}, {0, 2, 3}};
          for (auto& t : tri) {
            BoundaryFacet f{};
            for (int k = 0; k < 3; ++k)
              for (int q = 0; q < 3; ++q) f.v[k][q] = vx[t[k]][q];
            for (int q = 0; q < 3; ++q) f.Xref[q] = Xm[q];
            facets.push_back(f);
          }
        }
    };
    for (int ax = 0; ax < d; ++ax)
      for (int side = 0; side < 2; ++side) add_face_cells(ax, side);
  }

  DeformedCellLocator loc(g, eta);
  double blo[3], bhi[3];
  loc.bbox(blo, bhi);
  Lattice bg;
  bg.d = d;
  double hmax = 0.0;
  for (int a = 0; a < d; ++a) {
    bg.n[a] = bg_nodes_per_axis;
    bg.h[a] = (bhi[a] - blo[a]) / (bg_nodes_per_axis - 1);
    hmax = std::max(hmax, bg.h[a]);
  }
  const double eps = 2.0 * hmax;  // smoothing half-width of the interface
  std::array<int, 3> cells{1, 1, 1};
  long ncells = 1;
  for (int a = 0; a < d; ++a) {
    bg.lo[a] = blo[a] - eps - bg.h[a];
    cells[a] = bg.n[a] - 1 + 2 * static_cast<int>(std::ceil((eps + bg.h[a]) /
                                                            bg.h[a])) + 2;
    ncells *= cells[a];
  }
  double hv = 1.0;
  for (int a = 0; a < d; ++a) hv *= bg.h[a];

  // bin facets for the distance queries
  std::array<int, 3> bins{1, 1, 1};
  std::array<double, 3> bin_lo{}, bin_h{};
  for (int a = 0; a < d; ++a) {
    bin_lo[a] = bg.lo[a] - eps;
    double extent = (bhi[a] - blo[a]) + 4.0 * eps + 4.0 * bg.h[a];
    bins[a] = std::max(1, static_cast<int>(extent / std::max(eps, hmax)));
    bin_h[a] = extent / bins[a];
  }
  long nbins = static_cast<long>(bins[0]) * bins[1] * (d == 3 ? bins[2] : 1);
  std::vector<std::vector<int>> bin_facets(nbins);
  auto bin_flat = [&](const int* c) {
    long f = c[0];
    f = f * bins[1] + c[1];
    if (d == 3) f = f * bins[2] + c[2];
    return f;
  };
  for (std::size_t fi = 0; fi < facets.size(); ++fi) {
    double flo[3], fhi[3];
    int nv = d == 3 ? 3 : 2;
    for (int a = 0; a < d; ++a) {
      flo[a] = fhi[a] = facets[fi].v[0][a];
      for (int k = 1; k < nv; ++k) {
        flo[a] = std::min(flo[a], facets[fi].v[k][a]);
        fhi[a] = std::max(fhi[a], facets[fi].v[k][a]);
      }
    }
    int c0[3] = {0, 0, 0}, c1[3] = {0, 0, 0};
    for (int a = 0; a < d; ++a) {
      c0[a] = std::clamp(static_cast<int>((flo[a] - eps - bin_lo[a]) / bin_h[a]),
                         0, bins[a] - 1);
      c1[a] = std::clamp(static_cast<int>((fhi[a] + eps - bin_lo[a]) / bin_h[a]),
                         0, bins[a] - 1);
    }
    int c[3] = {0, 0, 0};
    for (c[0] = c0[0]; c[0] <= c1[0]; ++c[0])
      for (c[1] = c0[1]; c[1] <= c1[1]; ++c[1]) {
        if (d == 2) {
          bin_facets[bin_flat(c)].push_back(static_cast<int>(fi));
          continue;
        }
        for (c[2] = c0[2]; c[2] <= c1[2]; ++c[2])
          bin_facets[bin_flat(c)].push_back(static_cast<int>(fi));
      }
  }

  auto density_at = [&](const double* X) {
    double ev, detv;
    sample_multilinear(g.lat, dens, X, &ev);
    sample_multilinear(g.lat, st.det, X, &detv);
    return detv > 0.0 ? ev / detv : 0.0;
  };

  double E = 0.0;
  std::array<int, 3> c{0, 0, 0};
  double x[3], X[3];
  for (long cf = 0; cf < ncells; ++cf) {
    if (d == 3) {
      c[2] = static_cast<int>(cf % cells[2]);
      c[1] = static_cast<int>((cf / cells[2]) % cells[1]);
      c[0] = static_cast<int>(cf / (static_cast<long>(cells[1]) * cells[2]));
    } else {
      c[1] = static_cast<int>(cf % cells[1]);
      c[0] = static_cast<int>(cf / cells[1]);
    }
    for (int a = 0; a < d; ++a) x[a] = bg.lo[a] + (c[a] + 0.5) * bg.h[a];

    // distance to the deformed boundary, limited to the smoothing band
    double best2 = std::numeric_limits<double>::infinity();
    int best_facet = -1;
    int bc[3] = {0, 0, 0};
    bool in_domain = true;
    for (int a = 0; a < d; ++a) {
      bc[a] = static_cast<int>((x[a] - bin_lo[a]) / bin_h[a]);
      if (bc[a] < 0 || bc[a] >= bins[a]) in_domain = false;
    }
    if (in_domain)
      for (int fi : bin_facets[bin_flat(bc)]) {
        const BoundaryFacet& f = facets[fi];
        double d2 = d == 3 ? tri_dist2(x, f.v[0], f.v[1], f.v[2])
                           : seg_dist2(x, f.v[0], f.v[1]);
        if (d2 < best2) {
          best2 = d2;
          best_facet = fi;
        }
      }
    double dist = std::sqrt(best2);
    bool inside = loc.invert(x, X);
    if (dist > eps) {
      if (!inside) continue;
      E += density_at(X) * hv;
      continue;
    }
    double phi = inside ? dist : -dist;
    double wgt = smooth_heaviside(phi / eps);
    if (wgt <= 0.0) continue;
    const double* Xs = inside ? X : facets[best_facet].Xref;
    E += density_at(Xs) * wgt * hv;
  }
  return E;
}

GrowthAuditReport growth_audit(const MaterialParams& p, const ElasticLaw& w,
                               const AnisotropyLaw& psi, int d, long samples,
                               std::uint64_t seed) {
  GrowthAuditReport rep;
  rep.samples = samples;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  auto draw = [&](double* out, int n, double radius) {
    double v[27];
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      v[i] = gauss(rng);
      norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < n; ++i) out[i] = radius * v[i] / norm;
  };

  // calibrate the constants on a moderate ball, then test on a wide range
  const int ncal = 400;
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double F[9], M[3], dW[9], dPF[9], dPM[3];
  for (int i = 0; i < ncal; ++i) {
    double rF = 0.1 + 1.9 * uni(rng);
    double rM = 0.1 + 1.9 * uni(rng);
    draw(F, d * d, rF);
    draw(M, d, rM);
    double nF = vnorm(F, d * d), nM = vnorm(M, d);
    double Wv = w.value(F, d);
    w.dF(F, d, dW);
    double Pv = psi.value(F, M, d);
    psi.dF(F, M, d, dPF);
    psi.dM(F, M, d, dPM);
    double denom1 = std::pow(nF, p.p1) - 1.0;
    if (denom1 > 0.5) c1 = std::min(c1, Wv / denom1);
    c2 = std::max(c2, (std::abs(Wv) + vnorm(dW, d * d)) / (1.0 + std::pow(nF, p.p2)));
    c3 = std::max(c3, (std::abs(Pv) + vnorm(dPF, d * d)) /
                          (1.0 + std::pow(nF, p.p2) + std::pow(nM, p.p3)));
    c4 = std::max(c4, vnorm(dPM, d) /
                          (1.0 + std::pow(nF, p.p2) + std::pow(nM, p.p4)));
  }
  if (!std::isfinite(c1)) c1 = 0.0;
  c1 *= 0.5;
  c2 = 2.0 * std::max(c2, 1e-12);
  c3 = 2.0 * std::max(c3, 1e-12);
  c4 = 2.0 * std::max(c4, 1e-12);

  auto record = [&](const std::string& what, double ratio) {
    rep.pass = false;
    if (rep.violations.size() < 8) rep.violations.push_back(what);
    rep.tightest_ratio = std::min(rep.tightest_ratio, ratio);
  };

  for (long i = 0; i < samples; ++i) {
    double rF = std::pow(10.0, -1.0 + 2.5 * uni(rng));  // up to ~30
    double rM = std::pow(10.0, -1.0 + 2.5 * uni(rng));
    draw(F, d * d, rF);
    draw(M, d, rM);
    double nF = vnorm(F, d * d), nM = vnorm(M, d);
    double Wv = w.value(F, d);
    w.dF(F, d, dW);
    double Pv = psi.value(F, M, d);
    psi.dF(F, M, d, dPF);
    psi.dM(F, M, d, dPM);

    if (Wv < 0.0 || Pv < 0.0 || !std::isfinite(Wv) || !std::isfinite(Pv))
      record("nonnegativity/finiteness of W or Psi at |F|=" + std::to_string(nF),
             -1.0);

    double lhs1 = c1 * (std::pow(nF, p.p1) - 1.0);
    if (Wv < lhs1 - 1e-12)
      record("coercivity W >= c(|F|^p1 - 1) at |F|=" + std::to_string(nF),
             Wv / std::max(lhs1, 1e-300));
    double u2 = std::abs(Wv) + vnorm(dW, d * d);
    double b2 = c2 * (1.0 + std::pow(nF, p.p2));
    if (!(u2 <= b2))
      record("growth |W|+|W'| <= c(1+|F|^p2) at |F|=" + std::to_string(nF),
             b2 / std::max(u2, 1e-300));
    else
      rep.tightest_ratio = std::min(rep.tightest_ratio, b2 / std::max(u2, 1e-300));
    double u3 = std::abs(Pv) + vnorm(dPF, d * d);
    double b3 = c3 * (1.0 + std::pow(nF, p.p2) + std::pow(nM, p.p3));
    if (!(u3 <= b3))
      record("growth |Psi|+|Psi_F| bound at |M|=" + std::to_string(nM),
             b3 / std::max(u3, 1e-300));
    double u4 = vnorm(dPM, d);
    double b4 = c4 * (1.0 + std::pow(nF, p.p2) + std::pow(nM, p.p4));
    if (!(u4 <= b4))
      record("growth |Psi_M| bound at |M|=" + std::to_string(nM),
             b4 / std::max(u4, 1e-300));
  }
  return rep;
}

}  // namespace magmove
