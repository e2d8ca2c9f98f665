#pragma once

#include <utility>
#include <vector>

#include "magmove/energy.hpp"
#include "magmove/field.hpp"

namespace magmove {

enum class StepStatus { Accepted, SelfContact, EnergyBlowup, SolverFailure };

const char* to_string(StepStatus s);

struct Snapshot {
  double t = 0.0;
  Field eta;
  Field Mt;
  EnergyBreakdown energy;
  double dissipation = 0.0;  // R-tilde of the step leading to this state
  StepStatus status = StepStatus::Accepted;
  double min_det = 1.0;
  double cn_residual = 0.0;
  double injectivity_margin = 0.0;
  double el_res_eta = 0.0;
  double el_res_M = 0.0;
  int iterations = 0;
};

enum class InterpMode { Affine, ConstantRight, ConstantLeft };

// Time-indexed snapshots with uniform spacing dt; snapshot 0 is the initial
// state. Piecewise interpolant views over the stored states.
struct TrajectoryStore {
  double dt = 0.0;
  std::vector<Snapshot> snaps;

  void append(Snapshot s);
  double t_end() const { return snaps.empty() ? 0.0 : snaps.back().t; }
  std::pair<Field, Field> eval(double t, InterpMode mode) const;
};

}  // namespace magmove
