#pragma once

#include <memory>
#include <vector>

#include "magmove/field.hpp"
#include "magmove/grid.hpp"

namespace magmove {

// Nodal kinematic quantities derived from a deformation.
struct KinematicState {
  Field F;     // deformation gradient, d*d comps
  Field det;   // scalar
  Field cof;   // d*d
  Field Finv;  // d*d (identity rows where det <= 0; guarded by the flag)
  double min_det = 0.0;
  bool orientation_ok = false;  // min_det > 0
};

KinematicState build_kinematics(const Field& eta, const GridSpec& g);

// Uniform Eulerian lattice used for rasterized (current-configuration) fields.
struct BackgroundGrid {
  Lattice lat;
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < lat.d; ++a) v *= lat.h[a];
    return v;
  }
};

// Background grid covering the bounding box of the deformed nodes, expanded
// by margin_frac of the box diameter on each side.
BackgroundGrid make_background_grid(const Field& eta, int d, int nodes_per_axis,
                                    double margin_frac = 0.05);

// Multilinear sampling of a nodal field at a physical point. Returns false if
// the point lies outside the lattice (out is zero-filled in that case).
bool sample_multilinear(const Lattice& lat, const Field& f, const double* x,
                        double* out);

// Inverts the deformation cell-wise: multilinear shape functions per cell,
// Newton iteration from the cell center, candidate cells found by binning the
// deformed-cell bounding boxes.
class DeformedCellLocator {
 public:
  DeformedCellLocator(const GridSpec& g, const Field& eta);
  // On success fills the reference-domain point X with eta(X) = x.
  bool invert(const double* x, double* X) const;
  void bbox(double* lo, double* hi) const;

 private:
  const GridSpec& g_;
  const Field& eta_;
  int d_;
  std::array<int, 3> cells_{1, 1, 1};
  std::vector<double> cell_lo_, cell_hi_;
  std::array<int, 3> bins_{1, 1, 1};
  std::array<double, 3> bin_lo_{}, bin_h_{};
  std::vector<std::vector<int>> bin_cells_;
  bool invert_in_cell(long cell, const double* x, double* X) const;
};

// Eulerian field plus the coverage mask of the background nodes that received
// a value (nodes outside eta(Omega_0) stay zero, per the zero extension).
struct EulerianField {
  Field f;
  std::vector<std::uint8_t> covered;
};

EulerianField push_forward_magnetization(const Field& Mt, const Field& eta,
                                         const KinematicState& state,
                                         const GridSpec& g,
                                         const BackgroundGrid& bg);

Field pull_back_magnetization(const Field& M, const BackgroundGrid& bg,
                              const Field& eta, const KinematicState& state,
                              const GridSpec& g);

EulerianField eulerian_velocity(const Field& eta, const Field& deta,
                                const KinematicState& state, const GridSpec& g,
                                const BackgroundGrid& bg);

// Extended material derivative on the background grid:
// (M1 - M0)/dt + (v . grad) M1 + (div v) M1.
Field material_derivative(const Field& M0, const Field& M1, const Field& v,
                          double dt, const BackgroundGrid& bg);

struct CiarletNecasReport {
  double residual = 0.0;
  double tolerance = 0.0;
  double image_volume = 0.0;
  double det_integral = 0.0;
  bool ok = false;
};

CiarletNecasReport ciarlet_necas_residual(const Field& eta,
                                          const KinematicState& state,
                                          const GridSpec& g,
                                          int bg_nodes_per_axis = 48);

struct InjectivityReport {
  double margin = 0.0;
  bool ok = false;
};

// Minimum image distance over boundary-node pairs at reference distance
// >= delta (default 4h).
InjectivityReport boundary_injectivity_margin(const Field& eta, const GridSpec& g,
                                              double delta = -1.0);

// Surface area of the deformed boundary via the cofactor (Nanson) formula.
double deformed_surface_area(const KinematicState& state, const GridSpec& g);

}  // namespace magmove
