#include "magmove/trajectory.hpp"

#include <cmath>

namespace magmove {

const char* to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Accepted: return "accepted";
    case StepStatus::SelfContact: return "self-contact";
    case StepStatus::EnergyBlowup: return "energy-blowup";
    case StepStatus::SolverFailure: return "solver-failure";
  }
  return "unknown";
}

void TrajectoryStore::append(Snapshot s) {
  if (!snaps.empty()) {
    double expected = snaps.back().t + dt;
    if (std::abs(s.t - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw ContractError("trajectory snapshots must be uniformly spaced");
  }
  snaps.push_back(std::move(s));
}

std::pair<Field, Field> TrajectoryStore::eval(double t, InterpMode mode) const {
  if (snaps.empty()) throw RangeError("empty trajectory");
  const double t0 = snaps.front().t;
  const double tN = snaps.back().t;
  if (t < t0 - 1e-12 || t > tN + 1e-12)
    throw RangeError("time outside the stored trajectory");
  t = std::min(std::max(t, t0), tN);
  if (snaps.size() == 1 || dt <= 0.0)
    return {snaps.front().eta, snaps.front().Mt};

  double u = (t - t0) / dt;
  int k_hi = static_cast<int>(std::ceil(u - 1e-12));
  k_hi = std::max(1, std::min<int>(k_hi, static_cast<int>(snaps.size()) - 1));
  const Snapshot& lo = snaps[k_hi - 1];
  const Snapshot& hi = snaps[k_hi];

  switch (mode) {
    case InterpMode::ConstantRight:
      // snapshot k on ((k-1)dt, k dt]; t = t0 maps to snapshot 0
      return (t <= t0 + 1e-12) ? std::make_pair(snaps.front().eta, snaps.front().Mt)
                               : std::make_pair(hi.eta, hi.Mt);
    case InterpMode::ConstantLeft:
      return {lo.eta, lo.Mt};
    case InterpMode::Affine: {
      double th = (t - lo.t) / dt;
      Field eta = lo.eta, Mt = lo.Mt;
      for (std::size_t i = 0; i < eta.v.size(); ++i)
        eta.v[i] = (1.0 - th) * lo.eta.v[i] + th * hi.eta.v[i];
      for (std::size_t i = 0; i < Mt.v.size(); ++i)
        Mt.v[i] = (1.0 - th) * lo.Mt.v[i] + th * hi.Mt.v[i];
      return {std::move(eta), std::move(Mt)};
    }
  }
  throw ContractError("unknown interpolation mode");
}

}  // namespace magmove
