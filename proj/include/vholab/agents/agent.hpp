#pragma once

#include <string>
#include <vector>

#include "vholab/env.hpp"
#include "vholab/io/binio.hpp"

namespace vholab {

/// Training-loop interface shared by every learner.
///
/// The harness drives: act() -> env.step() -> observe_step(), then
/// on_episode_end() after the final step.  On-policy learners update in
/// on_episode_end(); off-policy learners update inside observe_step() on
/// their own cadence.  Exploration state (sampling, noise) lives behind
/// act(explore); explore = false must be deterministic given the parameters.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string kind() const = 0;
  virtual int act(const Observation& obs, bool explore) = 0;
  virtual void observe_step(const Transition& t) = 0;
  virtual void on_episode_end() = 0;

  /// Architecture size (weights + biases of every network that is trained).
  virtual std::size_t param_count() const = 0;

  virtual std::vector<std::string> diagnostics_header() const = 0;
  /// Per-update diagnostic rows accumulated since the last drain.
  virtual std::vector<std::vector<double>> take_diagnostics() = 0;

  virtual void serialize(BinWriter& w) const = 0;
  virtual void deserialize(BinReader& r) = 0;
};

}  // namespace vholab
