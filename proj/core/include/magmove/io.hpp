#pragma once

#include <optional>
#include <string>

#include "magmove/stepper.hpp"
#include "magmove/strayfield.hpp"
#include "magmove/trajectory.hpp"

namespace magmove {

// Fully parsed and validated run description.
struct RunConfig {
  int d = 3;
  int n = 9;
  std::array<double, 2> extent{0.0, 1.0};
  std::string dirichlet = "xd=0";

  MaterialParams material;
  StepConfig step;

  std::string force_preset = "zero";  // zero | constant | compress
  std::array<double, 3> force_vector{0.0, 0.0, 0.0};
  double force_magnitude = 0.0;
  std::array<double, 3> force_center{0.5, 0.5, 0.5};

  std::string hext_preset = "zero";  // zero | constant | sinusoid
  std::array<double, 3> hext_vector{0.0, 0.0, 0.0};
  double hext_amplitude = 0.0;
  double hext_omega = 0.0;
  std::array<double, 3> hext_wavevector{0.0, 0.0, 0.0};
  std::array<double, 3> hext_direction{0.0, 0.0, 1.0};

  std::string eta0_preset = "identity";  // identity | affine | file
  double eta0_lambda = 1.0;
  double eta0_shear = 0.0;
  std::string eta0_file;

  std::string Mt0_preset = "constant";  // constant | file
  std::array<double, 3> Mt0_vector{0.0, 0.0, 1.0};
  std::string Mt0_file;

  std::string output_dir = "out";
  int snapshot_stride = 0;

  std::vector<std::string> warnings;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& json_text);

GridSpec make_grid_from(const RunConfig& cfg);
DataProviders make_data(const RunConfig& cfg, const GridSpec& g);

// CSV time series, one row per stored snapshot, 17 significant digits.
void export_series(const TrajectoryStore& traj, const std::string& path);

struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // raw cells, bitwise comparable
};

SeriesTable read_series(const std::string& path);

// Binary nodal field: magic "MMFD", version, d, nodes per axis, components,
// then the values as little-endian doubles in storage order.
void write_field(const std::string& path, const Field& f, const Lattice& lat);
Field read_field(const std::string& path, Lattice* lat_out = nullptr);

// Writes eta/Mt (and optionally the stray potential and field on the padded
// background grid) of one snapshot plus a JSON sidecar.
void export_snapshot(const Snapshot& s, int k, const GridSpec& g,
                     const std::string& dir,
                     const StrayFieldSolution* stray = nullptr);

}  // namespace magmove
