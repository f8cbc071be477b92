#pragma once

#include <cmath>
#include <vector>

#include "vholab/env.hpp"
#include "vholab/errors.hpp"
#include "vholab/nn/net.hpp"

namespace vholab {

/// One on-policy rollout, laid out as parallel arrays (rows = steps).
struct RolloutBatch {
  Matrix obs;                    // T x kObsDim
  std::vector<int> actions;      // T
  std::vector<double> rewards;   // T
  Vector log_probs_old;          // T, log pi(a_t | s_t) at collection time
  Matrix probs_old;              // T x kNumActions, full policy rows
  Vector advantages;             // T
  Vector returns;                // T, advantage + value baseline
  int steps() const { return static_cast<int>(actions.size()); }
};

/// Generalized advantage estimates.  values has one extra trailing entry:
/// the bootstrap value of the state after the last step (0 for a terminal
/// state).  delta_t = r_t + gamma * v_{t+1} - v_t, accumulated with decay
/// gamma * lambda from the end of the rollout.
inline Vector compute_advantages(const std::vector<double>& rewards,
                                 const Vector& values, double gamma,
                                 double lambda) {
  const auto t_max = static_cast<Eigen::Index>(rewards.size());
  require(t_max > 0, "compute_advantages: empty rollout");
  require(values.size() == t_max + 1,
          "compute_advantages: need one value per state plus a bootstrap");
  require(gamma >= 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0,
          "compute_advantages: gamma and lambda must lie in [0, 1]");
  Vector adv(t_max);
  double acc = 0.0;
  for (Eigen::Index t = t_max - 1; t >= 0; --t) {
    const double delta =
        rewards[static_cast<std::size_t>(t)] + gamma * values(t + 1) - values(t);
    acc = delta + gamma * lambda * acc;
    adv(t) = acc;
  }
  return adv;
}

/// Shifts and scales to zero mean, unit standard deviation (population
/// convention).  A near-constant vector is left centered but unscaled.
inline Vector normalize_advantages(const Vector& adv) {
  require(adv.size() > 0, "normalize_advantages: empty input");
  const double mean = adv.mean();
  Vector out = adv.array() - mean;
  const double var = out.squaredNorm() / static_cast<double>(adv.size());
  const double sd = std::sqrt(var);
  if (sd > 1e-8) out /= sd;
  return out;
}

}  // namespace vholab
