#include "magmove/dissipation.hpp"

#include "magmove/ops.hpp"
#include "magmove/smallmat.hpp"

namespace magmove {

namespace {

double assemble(const KinematicState& ref, const RatePair& rates,
                const GridSpec& g, const MaterialParams& p, Field* g_deta,
                Field* g_dMt) {
  const int d = g.d();
  check_conforming(rates.deta, g.lat, d, "deformation rate");
  check_conforming(rates.dMt, g.lat, d, "magnetization rate");
  if (!ref.orientation_ok)
    throw ContractError("dissipation requires min det > 0 at the reference state");

  Field Gr = gradient(g.lat, rates.deta);
  Field A_G;
  if (g_deta) A_G = make_field(g.lat, d * d);

  double R = 0.0;
  const long N = g.nodes();
  for (long n = 0; n < N; ++n) {
    const double w = g.qw[n];
    const double det = ref.det.v[n];
    const double* Fi = ref.Finv.at(n);
    double T[9];
    mmul(Gr.at(n), Fi, d, T);
    R += w * p.nu * vdot(T, T, d * d) * det;
    const double* dM = rates.dMt.at(n);
    R += w * 0.5 * vdot(dM, dM, d) / det;

    if (g_deta) {
      const double c = w * 2.0 * p.nu * det;
      double* AG = A_G.at(n);
      for (int a = 0; a < d; ++a)
        for (int i = 0; i < d; ++i) {
          double s = 0.0;
          for (int j = 0; j < d; ++j) s += T[a * d + j] * Fi[i * d + j];
          AG[a * d + i] += c * s;
        }
      double* gm = g_dMt->at(n);
      for (int a = 0; a < d; ++a) gm[a] += w * dM[a] / det;
    }
  }
  if (g_deta) {
    Field adj = gradient_adjoint(g.lat, A_G);
    for (std::size_t i = 0; i < g_deta->v.size(); ++i) g_deta->v[i] += adj.v[i];
  }
  return R;
}

}  // namespace

double dissipation_rate(const KinematicState& ref, const RatePair& rates,
                        const GridSpec& g, const MaterialParams& p) {
  return assemble(ref, rates, g, p, nullptr, nullptr);
}

void grad_dissipation(const KinematicState& ref, const RatePair& rates,
                      const GridSpec& g, const MaterialParams& p, Field& g_deta,
                      Field& g_dMt) {
  g_deta = make_field(g.lat, g.d());
  g_dMt = make_field(g.lat, g.d());
  assemble(ref, rates, g, p, &g_deta, &g_dMt);
}

double eulerian_dissipation(const EulerianField& v, const EulerianField& DtM,
                            const BackgroundGrid& bg, const MaterialParams& p) {
  const int d = bg.lat.d;
  Field gv = gradient(bg.lat, v.f);
  double hv = bg.cell_volume();
  double R = 0.0;
  for (long n = 0; n < bg.lat.nodes(); ++n) {
    if (!v.covered[n]) continue;
    // skip nodes whose stencil touches uncovered neighbours: the finite
    // difference there straddles the image boundary
    auto ix = bg.lat.unflat(n);
    bool interior = true;
    for (int a = 0; a < d && interior; ++a) {
      for (int s = -1; s <= 1 && interior; s += 2) {
        auto jx = ix;
        jx[a] += s;
        if (jx[a] < 0 || jx[a] >= bg.lat.n[a])
          interior = false;
        else if (!v.covered[bg.lat.flat(jx)])
          interior = false;
      }
    }
    if (!interior) continue;
    R += hv * p.nu * vdot(gv.at(n), gv.at(n), d * d);
    R += hv * 0.5 * vdot(DtM.f.at(n), DtM.f.at(n), d);
  }
  return R;
}

}  // namespace magmove
