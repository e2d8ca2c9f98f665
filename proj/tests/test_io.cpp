#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "magmove/io.hpp"

using namespace magmove;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path p;
  TempDir() : p(fs::temp_directory_path() / "magmove_test_io") {
    fs::remove_all(p);
    fs::create_directories(p);
  }
  ~TempDir() { fs::remove_all(p); }
};

double cell(const SeriesTable& t, std::size_t row, const std::string& col) {
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (t.columns[c] == col) return std::strtod(t.rows[row][c].c_str(), nullptr);
  throw std::runtime_error("missing column " + col);
}

}  // namespace

TEST_CASE("a minimal config yields the documented defaults") {
  RunConfig cfg = parse_config_text(R"({"schema_version": 1})");
  CHECK(cfg.d == 3);
  CHECK(cfg.n == 9);
  CHECK(cfg.material.a == 13.0);
  CHECK(cfg.material.q == 4.0);
  CHECK(cfg.step.dt == 1e-2);
  CHECK(cfg.force_preset == "zero");
  CHECK(cfg.hext_preset == "zero");
  CHECK(cfg.eta0_preset == "identity");
  CHECK(cfg.warnings.empty());
}

TEST_CASE("schema versioning and unknown keys are rejected by name") {
  CHECK_THROWS_AS(parse_config_text(R"({"schema_version": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({})"), ConfigError);
  try {
    parse_config_text(R"({"schema_version": 1, "grid": {"bogus": 2}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("grid.bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(
      parse_config_text(R"({"schema_version": 1, "grid": {"n": "nine"}})"),
      ConfigError);
}

TEST_CASE("parameter hypotheses are enforced unless overridden") {
  CHECK_THROWS_AS(parse_config_text(
                      R"({"schema_version": 1, "material": {"a": 2.0}})"),
                  ConfigError);
  RunConfig cfg = parse_config_text(
      R"({"schema_version": 1,
          "material": {"a": 2.0, "override_growth": true}})");
  CHECK_FALSE(cfg.warnings.empty());
}

TEST_CASE("data presets evaluate to their closed forms") {
  RunConfig cfg = parse_config_text(R"({
    "schema_version": 1,
    "grid": {"n": 5},
    "data": {
      "force": {"preset": "constant", "vector": [0.1, -0.2, 0.3]},
      "hext": {"preset": "sinusoid", "amplitude": 0.7, "omega": 2.0,
               "wavevector": [1.0, 0.0, 3.0], "direction": [0.0, 0.0, 2.0]}
    }
  })");
  GridSpec g = make_grid_from(cfg);
  DataProviders data = make_data(cfg, g);
  double x[3] = {0.3, 0.6, 0.1}, f[3], H[3], gH[9];
  data.force->eval(0.7, x, 3, f);
  CHECK(f[0] == doctest::Approx(0.1));
  CHECK(f[1] == doctest::Approx(-0.2));
  CHECK(f[2] == doctest::Approx(0.3));
  CHECK(data.force->sup_norm() ==
        doctest::Approx(std::sqrt(0.01 + 0.04 + 0.09)));

  const double t = 0.25;
  double phase = 2.0 * t + 1.0 * x[0] + 3.0 * x[2];
  data.hext->eval(t, x, 3, H, gH);
  CHECK(H[0] == doctest::Approx(0.0));
  CHECK(H[2] == doctest::Approx(0.7 * std::sin(phase)).epsilon(1e-12));
  // row 2 of gradH: d/dx of H_z, the direction is normalized to unit length
  CHECK(gH[2 * 3 + 0] == doctest::Approx(0.7 * std::cos(phase) * 1.0).epsilon(1e-12));
  CHECK(gH[2 * 3 + 2] == doctest::Approx(0.7 * std::cos(phase) * 3.0).epsilon(1e-12));
  double dH[3];
  data.hext->dt_eval(t, x, 3, dH);
  CHECK(dH[2] == doctest::Approx(0.7 * 2.0 * std::cos(phase)).epsilon(1e-12));
  CHECK(data.hext->sup_norm() == doctest::Approx(0.7));
}

TEST_CASE("affine initial deformation preset") {
  RunConfig cfg = parse_config_text(R"({
    "schema_version": 1,
    "grid": {"n": 5},
    "data": {"eta0": {"preset": "affine", "lambda": 0.9, "shear": 0.2}}
  })");
  GridSpec g = make_grid_from(cfg);
  DataProviders data = make_data(cfg, g);
  for (long n = 0; n < g.nodes(); ++n) {
    double x[3];
    g.lat.pos(g.lat.unflat(n), x);
    CHECK(data.eta0.at(n)[0] ==
          doctest::Approx(0.9 * x[0] + 0.2 * x[2]).epsilon(1e-13));
    CHECK(data.eta0.at(n)[1] == doctest::Approx(0.9 * x[1]).epsilon(1e-13));
    CHECK(data.eta0.at(n)[2] == doctest::Approx(0.9 * x[2]).epsilon(1e-13));
  }
}

TEST_CASE("file presets require the file to exist") {
  CHECK_THROWS_AS(parse_config_text(R"({
    "schema_version": 1,
    "data": {"eta0": {"preset": "file", "file": "/nonexistent/path.bin"}}
  })"),
                  ConfigError);
}

TEST_CASE("series export round-trips every number bitwise") {
  TempDir tmp;
  RunConfig cfg = parse_config_text(R"({
    "schema_version": 1,
    "grid": {"n": 5},
    "data": {"eta0": {"preset": "affine", "lambda": 0.97}},
    "step": {"dt": 0.01, "t_end": 0.02}
  })");
  GridSpec g = make_grid_from(cfg);
  DataProviders data = make_data(cfg, g);
  TrajectoryStore traj = run_evolution(data, cfg.material, g, cfg.step);
  std::string path = (tmp.p / "series.csv").string();
  export_series(traj, path);
  SeriesTable tab = read_series(path);
  REQUIRE(tab.columns.size() == 17);
  CHECK(tab.columns[0] == "t");
  CHECK(tab.columns[8] == "total");
  CHECK(tab.columns[16] == "status");
  REQUIRE(tab.rows.size() == traj.snaps.size());
  for (std::size_t k = 0; k < traj.snaps.size(); ++k) {
    CHECK(cell(tab, k, "t") == traj.snaps[k].t);
    CHECK(cell(tab, k, "total") == traj.snaps[k].energy.total());
    CHECK(cell(tab, k, "dissipation") == traj.snaps[k].dissipation);
    CHECK(cell(tab, k, "min_det") == traj.snaps[k].min_det);
  }
}

TEST_CASE("binary field files round-trip bitwise") {
  TempDir tmp;
  GridSpec g = make_grid(3, 6, {0.25, 1.75});
  Field f = make_field(g.lat, 3);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (double& v : f.v) v = u(rng);
  std::string path = (tmp.p / "field.bin").string();
  write_field(path, f, g.lat);
  Lattice lat;
  Field back = read_field(path, &lat);
  CHECK(back.v == f.v);
  CHECK(back.comps == 3);
  CHECK(lat.n == g.lat.n);
  CHECK(lat.lo == g.lat.lo);
  CHECK(lat.h == g.lat.h);
}

TEST_CASE("corrupt field files are rejected") {
  TempDir tmp;
  std::string bad = (tmp.p / "bad.bin").string();
  {
    std::ofstream os(bad, std::ios::binary);
    os << "NOPE this is not a field file";
  }
  CHECK_THROWS(read_field(bad));

  GridSpec g = make_grid(3, 4);
  Field f = make_field(g.lat, 1);
  std::string trunc = (tmp.p / "trunc.bin").string();
  write_field(trunc, f, g.lat);
  fs::resize_file(trunc, fs::file_size(trunc) / 2);
  CHECK_THROWS(read_field(trunc));
}

TEST_CASE("snapshot export writes fields plus a sidecar") {
  TempDir tmp;
  GridSpec g = make_grid(3, 5);
  Snapshot s;
  s.t = 0.0;
  s.eta = identity_deformation(g);
  double m[3] = {0.0, 0.0, 1.0};
  s.Mt = constant_field(g.lat, m, 3);
  export_snapshot(s, 0, g, tmp.p.string());
  CHECK(fs::exists(tmp.p / "snap_000000_eta.bin"));
  CHECK(fs::exists(tmp.p / "snap_000000_Mt.bin"));
  CHECK(fs::exists(tmp.p / "snap_000000.json"));
  Field eta = read_field((tmp.p / "snap_000000_eta.bin").string());
  CHECK(eta.v == s.eta.v);
  std::ifstream is(tmp.p / "snap_000000.json");
  std::string side((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  CHECK(side.find("\"t\"") != std::string::npos);
  CHECK(side.find("energy") != std::string::npos);
}
