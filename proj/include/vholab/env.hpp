#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vholab/channel.hpp"
#include "vholab/errors.hpp"
#include "vholab/math/geom.hpp"
#include "vholab/math/rng.hpp"
#include "vholab/track.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Link-selection MDP.
//
// Every control tick the follower (transmitter) picks one of 8 link subsets
// for the next packet to the leader (receiver).  The observation is the
// leader's pose relative to the transmitter, normalized by the DSRC radio
// range; the reward is delivery success minus the summed cost of the links
// used.  Vehicle motion does not depend on the chosen action.
// ---------------------------------------------------------------------------

inline constexpr int kNumActions = 8;
inline constexpr int kObsDim = 4;

struct Observation {
  double x = 0.0;        // clip(relative x / R, -1, 1), transmitter frame
  double y = 0.0;        // clip(relative y / R, -1, 1)
  double cos_phi = 0.0;  // receiver heading offset
  double sin_phi = 0.0;

  std::array<double, kObsDim> as_array() const { return {x, y, cos_phi, sin_phi}; }
};

struct ActionDef {
  bool dsrc = false;
  bool headlight = false;
  bool taillight = false;

  int link_count() const {
    return (dsrc ? 1 : 0) + (headlight ? 1 : 0) + (taillight ? 1 : 0);
  }
};

/// Action ids are 0-based indices into this table; the id encodes the subset
/// as bits (dsrc = 1, headlight = 2, taillight = 4).
inline constexpr std::array<ActionDef, kNumActions> kActions = {{
    {false, false, false},  // 0: idle
    {true, false, false},   // 1: dsrc
    {false, true, false},   // 2: headlight
    {true, true, false},    // 3: dsrc + headlight
    {false, false, true},   // 4: taillight
    {true, false, true},    // 5: dsrc + taillight
    {false, true, true},    // 6: headlight + taillight
    {true, true, true},     // 7: all
}};

struct CostConfig {
  double dsrc = 0.4;
  double headlight = 0.1;
  double taillight = 0.1;
};

inline void validate(const CostConfig& c) {
  require_config(c.dsrc >= 0.0 && c.headlight >= 0.0 && c.taillight >= 0.0,
                 "costs must be non-negative");
}

inline double action_cost(int action_id, const CostConfig& costs) {
  require(action_id >= 0 && action_id < kNumActions, "action_id out of range");
  const ActionDef& a = kActions[static_cast<std::size_t>(action_id)];
  return (a.dsrc ? costs.dsrc : 0.0) + (a.headlight ? costs.headlight : 0.0) +
         (a.taillight ? costs.taillight : 0.0);
}

struct EnvConfig {
  int scenario = 1;
  double obs_range = 1000.0;  // R: position normalization, m
  int horizon = 4000;         // steps per episode
  double dt = 0.1;            // s
  TrackConfig track;
  MobilityConfig mobility;
  ChannelConfig channels;
  CostConfig costs;
};

inline void validate(const EnvConfig& c) {
  scenario_hairpins(c.scenario);  // rejects unknown scenarios
  require_config(c.obs_range > 0.0, "env: obs_range must be positive");
  require_config(c.horizon > 0, "env: horizon must be positive");
  require_config(c.dt > 0.0, "env: dt must be positive");
  validate(c.mobility);
  validate(c.channels);
  validate(c.costs);
}

/// Projects relative geometry into the 4-dimensional observation.
inline Observation observe(const RelGeometry& g, double obs_range) {
  const double xr = g.distance * std::cos(g.bearing_tx);
  const double yr = g.distance * std::sin(g.bearing_tx);
  return {clip(xr / obs_range, -1.0, 1.0), clip(yr / obs_range, -1.0, 1.0),
          std::cos(g.bearing_rx), std::sin(g.bearing_rx)};
}

struct StepInfo {
  int step = 0;
  double p_dsrc = 0.0;
  double p_headlight = 0.0;
  double p_taillight = 0.0;
  double p_combined = 0.0;
  bool success = false;
  double distance = 0.0;
  double bearing_tx = 0.0;
  double bearing_rx = 0.0;
  double airtime = 0.0;
};

struct Transition {
  Observation obs;
  int action_id = 0;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
  StepInfo info;
};

class Env {
 public:
  Env(const EnvConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), track_(build_track(cfg.track, cfg.scenario)) {
    validate(cfg_);
    reset(seed);
  }

  /// Restarts the episode with a fresh seed.  Mobility noise and packet
  /// outcomes use separate streams so the trajectory of observations is
  /// invariant to the actions taken.
  Observation reset(std::uint64_t seed) {
    rng_mobility_ = Rng::derive(seed, {0x6d6f62696cULL});
    rng_channel_ = Rng::derive(seed, {0x6368616eULL});
    const double v0 =
        0.5 * (kmh_to_mps(cfg_.mobility.speed_min_kmh) +
               kmh_to_mps(cfg_.mobility.speed_max_kmh));
    place_vehicle(track_, follower_, 0.0, v0);
    place_vehicle(track_, leader_, cfg_.mobility.start_gap, v0);
    step_ = 0;
    geom_ = relative_geometry(follower_, leader_);
    return observe(geom_, cfg_.obs_range);
  }

  bool done() const { return step_ >= cfg_.horizon; }
  int step_index() const { return step_; }
  const Track& track() const { return track_; }
  const EnvConfig& config() const { return cfg_; }
  const VehicleState& leader() const { return leader_; }
  const VehicleState& follower() const { return follower_; }
  const RelGeometry& geometry() const { return geom_; }

  /// Link probabilities for the current geometry (transmitter = follower).
  std::array<double, 3> link_probs() const {
    return {dsrc_success(geom_, cfg_.channels.dsrc),
            headlight_success(geom_, cfg_.channels.headlight),
            taillight_success(geom_, cfg_.channels.taillight)};
  }

  Transition step(int action_id) {
    require(!done(), "step() called on a finished episode");
    require(action_id >= 0 && action_id < kNumActions, "action_id out of range");
    const ActionDef& act = kActions[static_cast<std::size_t>(action_id)];

    Transition t;
    t.obs = observe(geom_, cfg_.obs_range);
    t.action_id = action_id;

    const auto probs = link_probs();
    std::vector<double> used;
    if (act.dsrc) used.push_back(probs[0]);
    if (act.headlight) used.push_back(probs[1]);
    if (act.taillight) used.push_back(probs[2]);
    const double p = combined_success(used);

    // One uniform is consumed per step regardless of the action, keeping
    // the channel stream aligned across policies.
    const bool success = rng_channel_.bernoulli(p);
    t.reward = (success ? 1.0 : 0.0) - action_cost(action_id, cfg_.costs);

    t.info.step = step_;
    t.info.p_dsrc = probs[0];
    t.info.p_headlight = probs[1];
    t.info.p_taillight = probs[2];
    t.info.p_combined = p;
    t.info.success = success;
    t.info.distance = geom_.distance;
    t.info.bearing_tx = geom_.bearing_tx;
    t.info.bearing_rx = geom_.bearing_rx;
    t.info.airtime =
        airtime_seconds(act.dsrc, act.headlight, act.taillight, cfg_.channels);

    step_vehicles(track_, leader_, follower_, cfg_.dt, cfg_.mobility,
                  rng_mobility_);
    geom_ = relative_geometry(follower_, leader_);
    ++step_;

    t.next_obs = observe(geom_, cfg_.obs_range);
    t.done = done();
    return t;
  }

 private:
  EnvConfig cfg_;
  Track track_;
  VehicleState leader_;
  VehicleState follower_;
  RelGeometry geom_;
  Rng rng_mobility_;
  Rng rng_channel_;
  int step_ = 0;
};

}  // namespace vholab
