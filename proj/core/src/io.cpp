#include "magmove/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace magmove {

namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::string& section,
                 std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known)
      throw ConfigError("unknown key '" + section + "." + it.key() + "'");
  }
}

double num(const json& j, const std::string& where, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number())
    throw ConfigError("'" + where + "." + key + "' must be a number");
  return j[key].get<double>();
}

int integer(const json& j, const std::string& where, const char* key, int def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer())
    throw ConfigError("'" + where + "." + key + "' must be an integer");
  return j[key].get<int>();
}

bool boolean(const json& j, const std::string& where, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean())
    throw ConfigError("'" + where + "." + key + "' must be a boolean");
  return j[key].get<bool>();
}

std::string str(const json& j, const std::string& where, const char* key,
                const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string())
    throw ConfigError("'" + where + "." + key + "' must be a string");
  return j[key].get<std::string>();
}

std::array<double, 3> vec3(const json& j, const std::string& where,
                           const char* key, std::array<double, 3> def, int d) {
  if (!j.contains(key)) return def;
  const json& a = j[key];
  if (!a.is_array() || static_cast<int>(a.size()) != d)
    throw ConfigError("'" + where + "." + key + "' must be an array of length " +
                      std::to_string(d));
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (int i = 0; i < d; ++i) {
    if (!a[i].is_number())
      throw ConfigError("'" + where + "." + key + "' entries must be numbers");
    out[i] = a[i].get<double>();
  }
  return out;
}

void require_file(const std::string& path, const std::string& key) {
  if (!std::filesystem::exists(path))
    throw ConfigError("file referenced by '" + key + "' does not exist: " + path);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  expect_keys(j, "",
              {"schema_version", "grid", "material", "data", "step", "output"});
  if (!j.contains("schema_version"))
    throw ConfigError("missing required key 'schema_version'");
  int version = integer(j, "", "schema_version", 1);
  if (version != 1)
    throw ConfigError("unsupported schema_version " + std::to_string(version));

  RunConfig c;

  if (j.contains("grid")) {
    const json& g = j["grid"];
    expect_keys(g, "grid", {"d", "n", "extent", "dirichlet"});
    c.d = integer(g, "grid", "d", 3);
    if (c.d != 2 && c.d != 3) throw ConfigError("'grid.d' must be 2 or 3");
    c.n = integer(g, "grid", "n", 9);
    if (g.contains("extent")) {
      const json& e = g["extent"];
      if (!e.is_array() || e.size() != 2)
        throw ConfigError("'grid.extent' must be [lo, hi]");
      c.extent = {e[0].get<double>(), e[1].get<double>()};
    }
    c.dirichlet = str(g, "grid", "dirichlet", "xd=0");
  }

  if (j.contains("material")) {
    const json& m = j["material"];
    expect_keys(m, "material",
                {"a", "q", "exchange_A", "beta", "nu", "mu", "rho", "mu_e", "K",
                 "easy_axis", "p1", "p2", "p3", "p4", "stray_field", "det_floor",
                 "override_growth", "det_penalty_weight", "hessian_weight",
                 "saturation_weight"});
    MaterialParams& p = c.material;
    p.a = num(m, "material", "a", p.a);
    p.q = num(m, "material", "q", p.q);
    p.exchange_A = num(m, "material", "exchange_A", p.exchange_A);
    p.beta = num(m, "material", "beta", p.beta);
    p.nu = num(m, "material", "nu", p.nu);
    p.mu = num(m, "material", "mu", p.mu);
    p.rho = num(m, "material", "rho", p.rho);
    p.mu_e = num(m, "material", "mu_e", p.mu_e);
    p.K = num(m, "material", "K", p.K);
    p.easy_axis = vec3(m, "material", "easy_axis", p.easy_axis, c.d);
    p.p1 = num(m, "material", "p1", p.p1);
    p.p2 = num(m, "material", "p2", p.p2);
    p.p3 = num(m, "material", "p3", p.p3);
    p.p4 = num(m, "material", "p4", p.p4);
    p.stray_field = boolean(m, "material", "stray_field", p.stray_field);
    p.det_floor = num(m, "material", "det_floor", p.det_floor);
    p.override_growth = boolean(m, "material", "override_growth", p.override_growth);
    p.det_penalty_weight = num(m, "material", "det_penalty_weight", p.det_penalty_weight);
    p.hessian_weight = num(m, "material", "hessian_weight", p.hessian_weight);
    p.saturation_weight = num(m, "material", "saturation_weight", p.saturation_weight);
  }
  c.material.validate(&c.warnings);

  if (j.contains("step")) {
    const json& s = j["step"];
    expect_keys(s, "step",
                {"dt", "t_end", "kappa", "grad_tol", "max_iters", "energy_max",
                 "inertial", "seed", "lbfgs_history", "cn_bg_nodes",
                 "stray_bg_nodes", "stray_pad", "alternating", "snapshot_stride"});
    StepConfig& t = c.step;
    t.dt = num(s, "step", "dt", t.dt);
    t.t_end = num(s, "step", "t_end", t.t_end);
    t.kappa = num(s, "step", "kappa", t.kappa);
    t.grad_tol = num(s, "step", "grad_tol", t.grad_tol);
    t.max_iters = integer(s, "step", "max_iters", t.max_iters);
    t.energy_max = num(s, "step", "energy_max", t.energy_max);
    t.inertial = boolean(s, "step", "inertial", t.inertial);
    t.seed = static_cast<std::uint64_t>(integer(s, "step", "seed", 0));
    t.lbfgs_history = integer(s, "step", "lbfgs_history", t.lbfgs_history);
    t.cn_bg_nodes = integer(s, "step", "cn_bg_nodes", t.cn_bg_nodes);
    t.stray_bg_nodes = integer(s, "step", "stray_bg_nodes", t.stray_bg_nodes);
    t.stray_pad = num(s, "step", "stray_pad", t.stray_pad);
    t.alternating = boolean(s, "step", "alternating", t.alternating);
    t.snapshot_stride = integer(s, "step", "snapshot_stride", t.snapshot_stride);
  }
  c.step.validate();

  if (j.contains("data")) {
    const json& d = j["data"];
    expect_keys(d, "data", {"force", "hext", "eta0", "Mt0"});
    if (d.contains("force")) {
      const json& f = d["force"];
      expect_keys(f, "data.force", {"preset", "vector", "magnitude", "center"});
      c.force_preset = str(f, "data.force", "preset", "zero");
      c.force_vector = vec3(f, "data.force", "vector", c.force_vector, c.d);
      c.force_magnitude = num(f, "data.force", "magnitude", 0.0);
      c.force_center = vec3(f, "data.force", "center", c.force_center, c.d);
      if (c.force_preset != "zero" && c.force_preset != "constant" &&
          c.force_preset != "compress")
        throw ConfigError("'data.force.preset' must be zero|constant|compress");
    }
    if (d.contains("hext")) {
      const json& h = d["hext"];
      expect_keys(h, "data.hext",
                  {"preset", "vector", "amplitude", "omega", "wavevector",
                   "direction"});
      c.hext_preset = str(h, "data.hext", "preset", "zero");
      c.hext_vector = vec3(h, "data.hext", "vector", c.hext_vector, c.d);
      c.hext_amplitude = num(h, "data.hext", "amplitude", 0.0);
      c.hext_omega = num(h, "data.hext", "omega", 0.0);
      c.hext_wavevector = vec3(h, "data.hext", "wavevector", c.hext_wavevector, c.d);
      c.hext_direction = vec3(h, "data.hext", "direction", c.hext_direction, c.d);
      if (c.hext_preset != "zero" && c.hext_preset != "constant" &&
          c.hext_preset != "sinusoid")
        throw ConfigError("'data.hext.preset' must be zero|constant|sinusoid");
    }
    if (d.contains("eta0")) {
      const json& e = d["eta0"];
      expect_keys(e, "data.eta0", {"preset", "lambda", "shear", "file"});
      c.eta0_preset = str(e, "data.eta0", "preset", "identity");
      c.eta0_lambda = num(e, "data.eta0", "lambda", 1.0);
      c.eta0_shear = num(e, "data.eta0", "shear", 0.0);
      c.eta0_file = str(e, "data.eta0", "file", "");
      if (c.eta0_preset == "file")
        require_file(c.eta0_file, "data.eta0.file");
      else if (c.eta0_preset != "identity" && c.eta0_preset != "affine")
        throw ConfigError("'data.eta0.preset' must be identity|affine|file");
    }
    if (d.contains("Mt0")) {
      const json& m = d["Mt0"];
      expect_keys(m, "data.Mt0", {"preset", "vector", "file"});
      c.Mt0_preset = str(m, "data.Mt0", "preset", "constant");
      c.Mt0_vector = vec3(m, "data.Mt0", "vector", c.Mt0_vector, c.d);
      c.Mt0_file = str(m, "data.Mt0", "file", "");
      if (c.Mt0_preset == "file")
        require_file(c.Mt0_file, "data.Mt0.file");
      else if (c.Mt0_preset != "constant")
        throw ConfigError("'data.Mt0.preset' must be constant|file");
    }
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    expect_keys(o, "output", {"dir", "snapshot_stride"});
    c.output_dir = str(o, "output", "dir", c.output_dir);
    c.snapshot_stride = integer(o, "output", "snapshot_stride", 0);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

GridSpec make_grid_from(const RunConfig& cfg) {
  return make_grid(cfg.d, cfg.n, cfg.extent, cfg.dirichlet);
}

namespace {

struct ConstantForce final : ForceProvider {
  std::array<double, 3> v;
  int d;
  void eval(double, const double*, int dd, double* f) const override {
    for (int a = 0; a < dd; ++a) f[a] = v[a];
  }
  double sup_norm() const override {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  }
};

// Inward pull toward a center point; drives the body toward collapse.
struct CompressForce final : ForceProvider {
  double mag = 0.0;
  std::array<double, 3> center;
  double reach = 1.0;  // estimated max |x - center| for the sup norm
  void eval(double, const double* x, int d, double* f) const override {
    for (int a = 0; a < d; ++a) f[a] = -mag * (x[a] - center[a]);
  }
  double sup_norm() const override { return mag * reach; }
};

struct ConstantHext final : ExternalFieldProvider {
  std::array<double, 3> v;
  void eval(double, const double*, int d, double* H, double* gH) const override {
    for (int a = 0; a < d; ++a) H[a] = v[a];
    if (gH)
      for (int i = 0; i < d * d; ++i) gH[i] = 0.0;
  }
  void dt_eval(double, const double*, int d, double* dH) const override {
    for (int a = 0; a < d; ++a) dH[a] = 0.0;
  }
  double sup_norm() const override {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  }
};

// H(t, x) = A sin(omega t + k.x) e with |e| normalized at construction.
struct SinusoidHext final : ExternalFieldProvider {
  double amp = 0.0, omega = 0.0;
  std::array<double, 3> k, e;
  void eval(double t, const double* x, int d, double* H, double* gH) const override {
    double phase = omega * t;
    for (int a = 0; a < d; ++a) phase += k[a] * x[a];
    double s = std::sin(phase), cc = std::cos(phase);
    for (int a = 0; a < d; ++a) H[a] = amp * s * e[a];
    if (gH)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) gH[a * d + b] = amp * cc * e[a] * k[b];
  }
  void dt_eval(double t, const double* x, int d, double* dH) const override {
    double phase = omega * t;
    for (int a = 0; a < d; ++a) phase += k[a] * x[a];
    double cc = std::cos(phase);
    for (int a = 0; a < d; ++a) dH[a] = amp * omega * cc * e[a];
  }
  double sup_norm() const override { return std::abs(amp); }
};

}  // namespace

DataProviders make_data(const RunConfig& cfg, const GridSpec& g) {
  DataProviders data;
  const int d = g.d();

  if (cfg.force_preset == "constant") {
    auto f = std::make_shared<ConstantForce>();
    f->v = cfg.force_vector;
    f->d = d;
    data.force = f;
  } else if (cfg.force_preset == "compress") {
    auto f = std::make_shared<CompressForce>();
    f->mag = cfg.force_magnitude;
    f->center = cfg.force_center;
    double diag = 0.0;
    for (int a = 0; a < d; ++a) {
      double ext = g.lat.extent(a);
      diag += ext * ext;
    }
    f->reach = 2.0 * std::sqrt(diag);
    data.force = f;
  }

  if (cfg.hext_preset == "constant") {
    auto h = std::make_shared<ConstantHext>();
    h->v = cfg.hext_vector;
    data.hext = h;
  } else if (cfg.hext_preset == "sinusoid") {
    auto h = std::make_shared<SinusoidHext>();
    h->amp = cfg.hext_amplitude;
    h->omega = cfg.hext_omega;
    h->k = cfg.hext_wavevector;
    h->e = cfg.hext_direction;
    double n = std::sqrt(h->e[0] * h->e[0] + h->e[1] * h->e[1] + h->e[2] * h->e[2]);
    if (n < 1e-12) throw ConfigError("'data.hext.direction' must be nonzero");
    for (int a = 0; a < 3; ++a) h->e[a] /= n;
    data.hext = h;
  }

  if (cfg.eta0_preset == "identity") {
    data.eta0 = identity_deformation(g);
  } else if (cfg.eta0_preset == "affine") {
    // eta = lambda X + shear X_last e_1
    data.eta0 = make_field(g.lat, d);
    for (long n = 0; n < g.nodes(); ++n) {
      double x[3];
      g.lat.pos(g.lat.unflat(n), x);
      for (int a = 0; a < d; ++a) data.eta0.at(n)[a] = cfg.eta0_lambda * x[a];
      data.eta0.at(n)[0] += cfg.eta0_shear * x[d - 1];
    }
  } else {
    Lattice lat;
    data.eta0 = read_field(cfg.eta0_file, &lat);
    check_conforming(data.eta0, g.lat, d, "eta0 file");
  }

  if (cfg.Mt0_preset == "constant") {
    data.Mt0 = constant_field(g.lat, cfg.Mt0_vector.data(), d);
  } else {
    Lattice lat;
    data.Mt0 = read_field(cfg.Mt0_file, &lat);
    check_conforming(data.Mt0, g.lat, d, "Mt0 file");
  }
  return data;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void export_series(const TrajectoryStore& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write series file: " + path);
  out << "t,W_term,det_penalty,hessian_term,anisotropy,stray,exchange,"
         "saturation,total,dissipation,el_res_eta,el_res_M,min_det,"
         "cn_residual,injectivity_margin,iterations,status\n";
  for (const Snapshot& s : traj.snaps) {
    const EnergyBreakdown& e = s.energy;
    out << fmt17(s.t) << ',' << fmt17(e.W_term) << ',' << fmt17(e.det_penalty)
        << ',' << fmt17(e.hessian_term) << ',' << fmt17(e.anisotropy) << ','
        << fmt17(e.stray) << ',' << fmt17(e.exchange) << ','
        << fmt17(e.saturation) << ',' << fmt17(e.total()) << ','
        << fmt17(s.dissipation) << ',' << fmt17(s.el_res_eta) << ','
        << fmt17(s.el_res_M) << ',' << fmt17(s.min_det) << ','
        << fmt17(s.cn_residual) << ',' << fmt17(s.injectivity_margin) << ','
        << s.iterations << ',' << to_string(s.status) << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

SeriesTable read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read series file: " + path);
  SeriesTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.columns = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

namespace {

constexpr char kMagic[4] = {'M', 'M', 'F', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void write_field(const std::string& path, const Field& f, const Lattice& lat) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write field file: " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(lat.d));
  for (int a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(lat.n[a]));
  put_u32(out, static_cast<std::uint32_t>(f.comps));
  out.write(reinterpret_cast<const char*>(lat.lo.data()), 3 * sizeof(double));
  out.write(reinterpret_cast<const char*>(lat.h.data()), 3 * sizeof(double));
  out.write(reinterpret_cast<const char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path);
}

Field read_field(const std::string& path, Lattice* lat_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read field file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("bad field file magic: " + path);
  std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw Error("unsupported field file version in " + path);
  Lattice lat;
  lat.d = static_cast<int>(get_u32(in));
  for (int a = 0; a < 3; ++a) lat.n[a] = static_cast<int>(get_u32(in));
  std::uint32_t comps = get_u32(in);
  in.read(reinterpret_cast<char*>(lat.lo.data()), 3 * sizeof(double));
  in.read(reinterpret_cast<char*>(lat.h.data()), 3 * sizeof(double));
  Field f;
  f.comps = static_cast<int>(comps);
  f.v.resize(static_cast<std::size_t>(lat.nodes()) * comps);
  in.read(reinterpret_cast<char*>(f.v.data()),
          static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (!in) throw Error("truncated field file: " + path);
  if (lat_out) *lat_out = lat;
  return f;
}

void export_snapshot(const Snapshot& s, int k, const GridSpec& g,
                     const std::string& dir,
                     const StrayFieldSolution* stray) {
  std::filesystem::create_directories(dir);
  char tag[32];
  std::snprintf(tag, sizeof(tag), "snap_%06d", k);
  const std::string base = dir + "/" + tag;

  write_field(base + "_eta.bin", s.eta, g.lat);
  write_field(base + "_Mt.bin", s.Mt, g.lat);

  nlohmann::json j;
  j["t"] = s.t;
  j["k"] = k;
  j["status"] = to_string(s.status);
  j["min_det"] = s.min_det;
  j["cn_residual"] = s.cn_residual;
  j["injectivity_margin"] = s.injectivity_margin;
  j["iterations"] = s.iterations;
  j["dissipation"] = s.dissipation;
  j["energy"] = {{"W_term", s.energy.W_term},
                 {"det_penalty", s.energy.det_penalty},
                 {"hessian_term", s.energy.hessian_term},
                 {"anisotropy", s.energy.anisotropy},
                 {"stray", s.energy.stray},
                 {"exchange", s.energy.exchange},
                 {"saturation", s.energy.saturation},
                 {"total", s.energy.total()}};
  j["files"] = {std::string(tag) + "_eta.bin", std::string(tag) + "_Mt.bin"};
  if (stray) {
    write_field(base + "_phi.bin", stray->phi, stray->padded);
    write_field(base + "_H.bin", stray->H, stray->padded);
    j["files"].push_back(std::string(tag) + "_phi.bin");
    j["files"].push_back(std::string(tag) + "_H.bin");
  }
  std::ofstream out(base + ".json");
  if (!out) throw Error("cannot write snapshot sidecar: " + base + ".json");
  out << j.dump(2) << '\n';
}

}  // namespace magmove
