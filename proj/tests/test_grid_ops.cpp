#include <cmath>
#include <random>

#include <doctest.h>

#include "magmove/ops.hpp"
#include "magmove/trajectory.hpp"

using namespace magmove;

namespace {

Field nodal(const GridSpec& g, int comps, auto&& fn) {
  Field f = make_field(g.lat, comps);
  for (long n = 0; n < g.nodes(); ++n) {
    double x[3];
    g.lat.pos(g.lat.unflat(n), x);
    fn(x, f.at(n));
  }
  return f;
}

}  // namespace

TEST_CASE("lattice index round trip and strides") {
  GridSpec g = make_grid(3, 5);
  CHECK(g.nodes() == 125);
  CHECK(g.lat.h[0] == doctest::Approx(0.25));
  for (long n = 0; n < g.nodes(); ++n) CHECK(g.lat.flat(g.lat.unflat(n)) == n);
  std::array<int, 3> ix{1, 2, 3};
  CHECK(g.lat.flat(ix) == 1 * g.lat.stride(0) + 2 * g.lat.stride(1) + 3);
}

TEST_CASE("boundary labels follow the dirichlet preset") {
  GridSpec g = make_grid(3, 5, {0.0, 1.0}, "xd=0");
  long dir = 0, free_b = 0;
  for (long n = 0; n < g.nodes(); ++n) {
    auto ix = g.lat.unflat(n);
    bool bottom = ix[2] == 0;
    if (g.is_dirichlet(n)) {
      ++dir;
      CHECK(bottom);
    }
    if (g.label[n] == NodeClass::Free) ++free_b;
  }
  CHECK(dir == 25);
  CHECK(free_b == 98 - 25);  // all boundary nodes minus the pinned face

  GridSpec ga = make_grid(3, 5, {0.0, 1.0}, "all");
  for (long n = 0; n < ga.nodes(); ++n)
    CHECK(ga.is_dirichlet(n) == ga.is_boundary(n));
}

TEST_CASE("quadrature weights integrate constants exactly") {
  GridSpec g = make_grid(3, 7, {0.0, 2.0});
  double s = 0.0;
  for (double w : g.qw) s += w;
  CHECK(s == doctest::Approx(8.0).epsilon(1e-13));
  Field one = nodal(g, 1, [](const double*, double* v) { v[0] = 1.0; });
  CHECK(integrate(g, one) == doctest::Approx(8.0).epsilon(1e-13));
  CHECK(l2_norm(g, one) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-13));
}

TEST_CASE("trapezoid error of x^2 shrinks by a factor 4 per halving") {
  auto err = [](int n) {
    GridSpec g = make_grid(3, n);
    Field f = nodal(g, 1, [](const double* x, double* v) { v[0] = x[0] * x[0]; });
    return std::abs(integrate(g, f) - 1.0 / 3.0);
  };
  double r = err(9) / err(17);
  CHECK(r == doctest::Approx(4.0).epsilon(0.025));
}

TEST_CASE("derivatives are exact on per-axis quadratics") {
  GridSpec g = make_grid(3, 6);
  Field f = nodal(g, 1, [](const double* x, double* v) {
    v[0] = 1.5 * x[0] * x[0] - 2.0 * x[1] + 0.5 * x[2] * x[2] + x[0] * x[1];
  });
  Field df = gradient(g.lat, f);
  for (long n = 0; n < g.nodes(); ++n) {
    double x[3];
    g.lat.pos(g.lat.unflat(n), x);
    CHECK(df.at(n)[0] == doctest::Approx(3.0 * x[0] + x[1]).epsilon(1e-12));
    CHECK(df.at(n)[1] == doctest::Approx(-2.0 + x[0]).epsilon(1e-12));
    CHECK(df.at(n)[2] == doctest::Approx(x[2]).epsilon(1e-12));
  }
}

TEST_CASE("hessian mixed entries are symmetric on smooth data") {
  GridSpec g = make_grid(3, 8);
  Field f = nodal(g, 1, [](const double* x, double* v) {
    v[0] = std::sin(x[0]) * std::cos(2.0 * x[1]) + x[2] * x[0];
  });
  Field H = hessian(g.lat, f);
  for (long n = 0; n < g.nodes(); ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        CHECK(H.at(n)[i * 3 + j] ==
              doctest::Approx(H.at(n)[j * 3 + i]).epsilon(1e-10));
}

TEST_CASE("gradient and hessian adjoints satisfy the pairing identity") {
  GridSpec g = make_grid(3, 5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f = make_field(g.lat, 2);
  for (double& v : f.v) v = u(rng);
  Field gf = gradient(g.lat, f);
  Field w = make_field(g.lat, gf.comps);
  for (double& v : w.v) v = u(rng);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < gf.v.size(); ++i) lhs += gf.v[i] * w.v[i];
  Field wt = gradient_adjoint(g.lat, w);
  for (std::size_t i = 0; i < f.v.size(); ++i) rhs += f.v[i] * wt.v[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  Field hf = hessian(g.lat, f);
  Field z = make_field(g.lat, hf.comps);
  for (double& v : z.v) v = u(rng);
  double l2 = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < hf.v.size(); ++i) l2 += hf.v[i] * z.v[i];
  Field zt = hessian_adjoint(g.lat, z);
  for (std::size_t i = 0; i < f.v.size(); ++i) r2 += f.v[i] * zt.v[i];
  CHECK(l2 == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("trajectory interpolants and spacing contract") {
  GridSpec g = make_grid(2, 4);
  TrajectoryStore traj;
  traj.dt = 0.1;
  for (int k = 0; k <= 2; ++k) {
    Snapshot s;
    s.t = 0.1 * k;
    s.eta = make_field(g.lat, 2);
    for (double& v : s.eta.v) v = k;
    s.Mt = make_field(g.lat, 2);
    traj.append(std::move(s));
  }
  auto [mid, mm] = traj.eval(0.15, InterpMode::Affine);
  CHECK(mid.v[0] == doctest::Approx(1.5));
  auto [right, mr] = traj.eval(0.15, InterpMode::ConstantRight);
  CHECK(right.v[0] == doctest::Approx(2.0));
  auto [left, ml] = traj.eval(0.15, InterpMode::ConstantLeft);
  CHECK(left.v[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(traj.eval(0.31, InterpMode::Affine), RangeError);

  Snapshot bad;
  bad.t = 0.35;
  bad.eta = make_field(g.lat, 2);
  bad.Mt = make_field(g.lat, 2);
  CHECK_THROWS_AS(traj.append(std::move(bad)), ContractError);
}
