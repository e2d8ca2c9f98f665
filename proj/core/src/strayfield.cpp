#include "magmove/strayfield.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "magmove/ops.hpp"
#include "magmove/smallmat.hpp"

namespace magmove {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct FftCache {
  int d = 3;
  std::array<int, 3> N{1, 1, 1};
  long real_n = 0, cplx_n = 0;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan fwd{}, bwd{};

  ~FftCache() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
  }
};

FftCache& get_cache(int d, const std::array<int, 3>& N) {
  static std::map<std::array<int, 4>, std::unique_ptr<FftCache>> cache;
  std::array<int, 4> key{d, N[0], N[1], N[2]};
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  auto e = std::make_unique<FftCache>();
  e->d = d;
  e->N = N;
  e->real_n = 1;
  for (int a = 0; a < d; ++a) e->real_n *= N[a];
  e->cplx_n = e->real_n / N[d - 1] * (N[d - 1] / 2 + 1);
  e->real = fftw_alloc_real(e->real_n);
  e->cplx = fftw_alloc_complex(e->cplx_n);
  int dims[3] = {N[0], N[1], N[2]};
  e->fwd = fftw_plan_dft_r2c(d, dims, e->real, e->cplx, FFTW_ESTIMATE);
  e->bwd = fftw_plan_dft_c2r(d, dims, e->cplx, e->real, FFTW_ESTIMATE);
  auto& ref = *e;
  cache.emplace(key, std::move(e));
  return ref;
}

struct PaddedSetup {
  Lattice padded;
  std::array<int, 3> N{1, 1, 1};
  std::array<int, 3> offset{0, 0, 0};
};

PaddedSetup padded_setup(const BackgroundGrid& bg, double pad_factor) {
  if (pad_factor < 2.0)
    throw ConfigError("stray-field padding factor must be >= 2 (aliasing risk)");
  const int d = bg.lat.d;
  PaddedSetup s;
  s.padded.d = d;
  for (int a = 0; a < d; ++a) {
    int n = bg.lat.n[a];
    int N = static_cast<int>(std::ceil(pad_factor * n));
    s.N[a] = N;
    s.offset[a] = (N - n) / 2;
    s.padded.n[a] = N;
    s.padded.h[a] = bg.lat.h[a];
    s.padded.lo[a] = bg.lat.lo[a] - s.offset[a] * bg.lat.h[a];
  }
  return s;
}

// Core spectral solve. Fills H on the padded lattice; phi optionally.
void spectral_solve(const Field& M, const BackgroundGrid& bg,
                    const PaddedSetup& s, Field* H_padded, Field* phi_padded) {
  const int d = bg.lat.d;
  FftCache& fc = get_cache(d, s.N);
  const long nreal = fc.real_n;
  const long ncplx = fc.cplx_n;
  const int nc_last = s.N[d - 1] / 2 + 1;

  auto padded_flat = [&](const std::array<int, 3>& ix) {
    long f = 0;
    for (int a = 0; a < d; ++a) f = f * s.N[a] + ix[a];
    return f;
  };

  // forward transforms of each magnetization component
  std::vector<std::vector<std::complex<double>>> Mk(
      d, std::vector<std::complex<double>>(ncplx));
  for (int c = 0; c < d; ++c) {
    std::fill(fc.real, fc.real + nreal, 0.0);
    for (long n = 0; n < bg.lat.nodes(); ++n) {
      auto ix = bg.lat.unflat(n);
      for (int a = 0; a < d; ++a) ix[a] += s.offset[a];
      fc.real[padded_flat(ix)] = M.at(n)[c];
    }
    fftw_execute(fc.fwd);
    for (long i = 0; i < ncplx; ++i)
      Mk[c][i] = {fc.cplx[i][0], fc.cplx[i][1]};
  }

  // projection kernel; k = 0 and all Nyquist planes are zeroed so the
  // operator is an exact symmetric projection on the discrete grid
  std::vector<std::vector<std::complex<double>>> Hk(
      d, std::vector<std::complex<double>>(ncplx));
  std::vector<std::complex<double>> phik(phi_padded ? ncplx : 0);

  std::array<int, 3> ci{0, 0, 0};
  for (long f = 0; f < ncplx; ++f) {
    long r = f;
    ci[d - 1] = static_cast<int>(r % nc_last);
    r /= nc_last;
    for (int a = d - 2; a >= 0; --a) {
      ci[a] = static_cast<int>(r % s.N[a]);
      r /= s.N[a];
    }
    double k[3] = {0.0, 0.0, 0.0};
    bool masked = false;
    for (int a = 0; a < d; ++a) {
      int Na = s.N[a];
      int i = ci[a];
      if (Na % 2 == 0 && i == Na / 2) masked = true;
      int fr = i <= Na / 2 ? i : i - Na;
      k[a] = kTwoPi * fr / (Na * s.padded.h[a]);
    }
    double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    std::complex<double> kd{0.0, 0.0};
    if (!masked && k2 > 0.0) {
      for (int a = 0; a < d; ++a) kd += k[a] * Mk[a][f];
      kd /= k2;
    }
    for (int a = 0; a < d; ++a) Hk[a][f] = -k[a] * kd;
    if (phi_padded) phik[f] = std::complex<double>(0.0, -1.0) * kd;
  }

  const double scale = 1.0 / static_cast<double>(nreal);
  auto inverse_to = [&](const std::vector<std::complex<double>>& spec,
                        Field& out, int comp) {
    for (long i = 0; i < ncplx; ++i) {
      fc.cplx[i][0] = spec[i].real();
      fc.cplx[i][1] = spec[i].imag();
    }
    fftw_execute(fc.bwd);
    for (long i = 0; i < nreal; ++i) out.v[i * out.comps + comp] = fc.real[i] * scale;
  };

  if (H_padded) {
    *H_padded = make_field(s.padded, d);
    for (int a = 0; a < d; ++a) inverse_to(Hk[a], *H_padded, a);
  }
  if (phi_padded) {
    *phi_padded = make_field(s.padded, 1);
    inverse_to(phik, *phi_padded, 0);
  }
}

}  // namespace

const double* StrayFieldSolution::H_at(long bg_node) const {
  auto ix = grid.lat.unflat(bg_node);
  for (int a = 0; a < grid.lat.d; ++a) ix[a] += offset[a];
  return H.at(padded.flat(ix));
}

StrayFieldSolution solve_stray_field(const Field& M, const BackgroundGrid& bg,
                                     double mu, double pad_factor) {
  const int d = bg.lat.d;
  check_conforming(M, bg.lat, d, "eulerian magnetization");
  PaddedSetup s = padded_setup(bg, pad_factor);
  StrayFieldSolution sol;
  sol.grid = bg;
  sol.padded = s.padded;
  sol.offset = s.offset;
  spectral_solve(M, bg, s, &sol.H, &sol.phi);
  double hv = 1.0;
  for (int a = 0; a < d; ++a) hv *= s.padded.h[a];
  double e = 0.0;
  for (long n = 0; n < s.padded.nodes(); ++n) {
    const double* h = sol.H.at(n);
    for (int a = 0; a < d; ++a) e += h[a] * h[a];
  }
  sol.field_energy = 0.5 * mu * e * hv;
  return sol;
}

std::pair<double, double> stray_energy_identity(const Field& M,
                                                const StrayFieldSolution& sol,
                                                double mu) {
  const int d = sol.grid.lat.d;
  double hv = sol.grid.cell_volume();
  double mh = 0.0;
  for (long n = 0; n < sol.grid.lat.nodes(); ++n) {
    const double* h = sol.H_at(n);
    const double* m = M.at(n);
    for (int a = 0; a < d; ++a) mh += m[a] * h[a];
  }
  return {-0.5 * mu * mh * hv, sol.field_energy};
}

double stability_check(const Field& M, const StrayFieldSolution& sol) {
  const int d = sol.grid.lat.d;
  double m2 = 0.0;
  for (double x : M.v) m2 += x * x;
  if (m2 == 0.0) return 0.0;
  double h2 = 0.0;
  for (double x : sol.H.v) h2 += x * x;
  (void)d;
  return std::sqrt(h2 / m2);
}

Field pullback_stray(const StrayFieldSolution& sol, const Field& eta,
                     const GridSpec& g) {
  const int d = g.d();
  Field out = make_field(g.lat, d);
  for (long n = 0; n < g.nodes(); ++n)
    sample_multilinear(sol.padded, sol.H, eta.at(n), out.at(n));
  return out;
}

// --- cubic B-spline transfer ---

namespace {

inline double bspline3(double u) {
  double t = std::abs(u);
  if (t < 1.0) return 2.0 / 3.0 - t * t + 0.5 * t * t * t;
  if (t < 2.0) {
    double w = 2.0 - t;
    return w * w * w / 6.0;
  }
  return 0.0;
}

inline double bspline3_deriv(double u) {
  double t = std::abs(u);
  double s = u < 0.0 ? -1.0 : 1.0;
  if (t < 1.0) return s * (-2.0 * t + 1.5 * t * t);
  if (t < 2.0) {
    double w = 2.0 - t;
    return s * (-0.5 * w * w);
  }
  return 0.0;
}

// Iterate the (up to 4^d) background nodes in the spline support of point y.
template <typename F>
void for_support(const BackgroundGrid& bg, const double* y, F&& body) {
  const int d = bg.lat.d;
  int j0[3] = {0, 0, 0}, j1[3] = {0, 0, 0};
  double u[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    u[a] = (y[a] - bg.lat.lo[a]) / bg.lat.h[a];
    int base = static_cast<int>(std::floor(u[a]));
    j0[a] = std::max(0, base - 1);
    j1[a] = std::min(bg.lat.n[a] - 1, base + 2);
    if (j0[a] > j1[a]) return;  // support entirely outside the grid
  }
  std::array<int, 3> ix{0, 0, 0};
  double w[3][4], dw[3][4];
  for (int a = 0; a < d; ++a)
    for (int j = j0[a]; j <= j1[a]; ++j) {
      w[a][j - j0[a]] = bspline3(u[a] - j);
      dw[a][j - j0[a]] = bspline3_deriv(u[a] - j) / bg.lat.h[a];
    }
  for (int i = j0[0]; i <= j1[0]; ++i) {
    ix[0] = i;
    for (int j = (d > 1 ? j0[1] : 0); j <= (d > 1 ? j1[1] : 0); ++j) {
      ix[1] = j;
      for (int k = (d > 2 ? j0[2] : 0); k <= (d > 2 ? j1[2] : 0); ++k) {
        ix[2] = k;
        double B = w[0][i - j0[0]];
        if (d > 1) B *= w[1][j - j0[1]];
        if (d > 2) B *= w[2][k - j0[2]];
        double gB[3] = {0.0, 0.0, 0.0};
        // gradient with respect to y
        for (int a = 0; a < d; ++a) {
          double p = 1.0;
          for (int b = 0; b < d; ++b) {
            int jj = (b == 0 ? i : b == 1 ? j : k) - j0[b];
            p *= (b == a) ? dw[b][jj] : w[b][jj];
          }
          gB[a] = p;
        }
        body(bg.lat.flat(ix), B, gB);
      }
    }
  }
}

}  // namespace

Field deposit_magnetization(const GridSpec& g, const Field& eta, const Field& Mt,
                            const BackgroundGrid& bg) {
  const int d = g.d();
  Field M = make_field(bg.lat, d);
  const double inv_hv = 1.0 / bg.cell_volume();
  for (long i = 0; i < g.nodes(); ++i) {
    const double scale = inv_hv * g.qw[i];
    const double* Mi = Mt.at(i);
    for_support(bg, eta.at(i), [&](long b, double B, const double*) {
      double* out = M.at(b);
      for (int a = 0; a < d; ++a) out[a] += scale * B * Mi[a];
    });
  }
  return M;
}

void stray_deposit_adjoint(const GridSpec& g, const Field& eta, const Field& Mt,
                           const BackgroundGrid& bg, const Field& H_bg, double mu,
                           Field& gEta, Field& gMt) {
  const int d = g.d();
  for (long i = 0; i < g.nodes(); ++i) {
    const double wi = g.qw[i];
    const double* Mi = Mt.at(i);
    double* ge = gEta.at(i);
    double* gm = gMt.at(i);
    for_support(bg, eta.at(i), [&](long b, double B, const double* gB) {
      const double* Hb = H_bg.at(b);
      double HdotM = 0.0;
      for (int a = 0; a < d; ++a) {
        gm[a] += -mu * wi * B * Hb[a];
        HdotM += Hb[a] * Mi[a];
      }
      for (int a = 0; a < d; ++a) ge[a] += -mu * wi * HdotM * gB[a];
    });
  }
}

double StrayContext::energy_and_grad(const GridSpec& g, const Field& eta,
                                     const Field& Mt, double mu, Field* gEta,
                                     Field* gMt, Field* H_out) const {
  const int d = g.d();
  Field M = deposit_magnetization(g, eta, Mt, bg);
  PaddedSetup s = padded_setup(bg, pad_factor);
  Field Hpad;
  spectral_solve(M, bg, s, &Hpad, nullptr);

  // crop to the background grid
  Field Hbg = make_field(bg.lat, d);
  for (long n = 0; n < bg.lat.nodes(); ++n) {
    auto ix = bg.lat.unflat(n);
    for (int a = 0; a < d; ++a) ix[a] += s.offset[a];
    const double* h = Hpad.at(s.padded.flat(ix));
    for (int a = 0; a < d; ++a) Hbg.at(n)[a] = h[a];
  }

  double mh = 0.0;
  for (long n = 0; n < bg.lat.nodes(); ++n)
    mh += vdot(M.at(n), Hbg.at(n), d);
  double S = -0.5 * mu * mh * bg.cell_volume();

  if (gEta && gMt) stray_deposit_adjoint(g, eta, Mt, bg, Hbg, mu, *gEta, *gMt);
  if (H_out) *H_out = std::move(Hbg);
  return S;
}

std::shared_ptr<StrayContext> make_stray_context(const Field& eta_ref,
                                                 const GridSpec& g, int bg_nodes,
                                                 double pad_factor,
                                                 double margin_frac) {
  auto ctx = std::make_shared<StrayContext>();
  ctx->bg = make_background_grid(eta_ref, g.d(), bg_nodes, margin_frac);
  ctx->pad_factor = pad_factor;
  return ctx;
}

}  // namespace magmove
