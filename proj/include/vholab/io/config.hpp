#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vholab/agents/ppo.hpp"
#include "vholab/agents/rainbow.hpp"
#include "vholab/agents/sac.hpp"
#include "vholab/agents/trpo.hpp"
#include "vholab/env.hpp"
#include "vholab/errors.hpp"

namespace vholab {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Run-level configuration: environment, all four learner configurations and
// the benchmark knobs, loadable from a single JSON file.  Unknown keys and
// type mismatches are rejected with the offending path named; a missing key
// keeps its default, so an empty file ({}) is the default run.
// ---------------------------------------------------------------------------

struct TrainParams {
  int episodes = 300;
  int curve_window = 20;  // trailing window defining "final" performance
};

struct EvalParams {
  int episodes = 3;  // greedy episodes averaged into metrics.json
};

struct GridParams {
  std::vector<std::uint64_t> seeds = {0, 1};
  int episodes = 30;  // screening budget per cell; the winner retrains in full
};

struct RobustnessParams {
  int eval_episodes = 30;  // greedy episodes per scenario and checkpoint
};

struct DecisionMapParams {
  double distance_min = 1.0;
  double distance_max = 80.0;
  int distance_bins = 40;
  int bearing_bins = 72;
};

struct RunConfig {
  int scenario = 1;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string agent = "ppo";
  EnvConfig env;
  PpoConfig ppo;
  TrpoConfig trpo;
  SacConfig sac;
  RainbowConfig rainbow;
  TrainParams train;
  EvalParams eval;
  GridParams grid;
  RobustnessParams robustness;
  DecisionMapParams decision_map;
};

inline void validate(const RunConfig& c) {
  require_config(c.agent == "ppo" || c.agent == "trpo" || c.agent == "sac" ||
                     c.agent == "rainbow",
                 "agent must be one of: ppo, trpo, sac, rainbow");
  require_config(!c.seeds.empty(), "seeds must not be empty");
  require_config(c.train.episodes >= 0, "train.episodes must be non-negative");
  require_config(c.train.curve_window > 0, "train.curve_window must be positive");
  require_config(c.eval.episodes > 0, "eval.episodes must be positive");
  require_config(!c.grid.seeds.empty(), "grid.seeds must not be empty");
  require_config(c.grid.episodes > 0, "grid.episodes must be positive");
  require_config(c.robustness.eval_episodes > 0,
                 "robustness.eval_episodes must be positive");
  require_config(c.decision_map.distance_min > 0.0 &&
                     c.decision_map.distance_max > c.decision_map.distance_min,
                 "decision_map: need 0 < distance_min < distance_max");
  require_config(c.decision_map.distance_bins > 0 && c.decision_map.bearing_bins > 0,
                 "decision_map: bin counts must be positive");
  validate(c.env);
  validate(c.ppo);
  validate(c.trpo);
  validate(c.sac);
  validate(c.rainbow);
}

// ------------------------------ to_json -----------------------------------

inline Json to_json(const TrackConfig& c) {
  return {{"straight_length_m", c.straight_length},
          {"hairpin_radius_m", c.hairpin_radius},
          {"closing_radius_m", c.closing_radius},
          {"hairpin_count", c.hairpin_count},
          {"resolution_m", c.resolution}};
}

inline Json to_json(const MobilityConfig& c) {
  return {{"speed_min_kmh", c.speed_min_kmh},
          {"speed_max_kmh", c.speed_max_kmh},
          {"leader_accel_noise", c.leader_accel_noise},
          {"follower_accel_noise", c.follower_accel_noise},
          {"max_accel", c.max_accel},
          {"gap_kp", c.gap_kp},
          {"gap_kd", c.gap_kd},
          {"target_gap_m", c.target_gap},
          {"min_gap_m", c.min_gap},
          {"max_gap_m", c.max_gap},
          {"start_gap_m", c.start_gap}};
}

inline Json to_json(const DsrcConfig& c) {
  return {{"range_50_m", c.range_50},
          {"steepness", c.steepness},
          {"max_range_m", c.max_range},
          {"clamp_min", c.clamp_min},
          {"clamp_max", c.clamp_max}};
}

inline Json to_json(const VlcConfig& c) {
  return {{"max_range_m", c.max_range},
          {"rolloff", c.rolloff},
          {"half_angle_left_deg", c.half_angle_left_deg},
          {"half_angle_right_deg", c.half_angle_right_deg},
          {"taper_deg", c.taper_deg},
          {"rx_fov_deg", c.rx_fov_deg},
          {"clamp_min", c.clamp_min},
          {"clamp_max", c.clamp_max}};
}

inline Json to_json(const PpoConfig& c) {
  return {{"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},
          {"clip", c.clip},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"entropy_coef", c.entropy_coef},
          {"epochs", c.epochs},
          {"minibatch", c.minibatch},
          {"actor_hidden", c.actor_hidden},
          {"critic_hidden", c.critic_hidden},
          {"normalize_advantages", c.normalize_advantages}};
}

inline Json to_json(const TrpoConfig& c) {
  return {{"kl_delta", c.kl_delta},
          {"hidden_width", c.hidden_width},
          {"line_search_max_iter", c.line_search_max_iter},
          {"cg_iters", c.cg_iters},
          {"cg_damping", c.cg_damping},
          {"lr_critic", c.lr_critic},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"critic_epochs", c.critic_epochs},
          {"minibatch", c.minibatch},
          {"normalize_advantages", c.normalize_advantages}};
}

inline Json to_json(const SacConfig& c) {
  return {{"tau", c.tau},
          {"lr", c.lr},
          {"batch", c.batch},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"replay_capacity", c.replay_capacity},
          {"warmup_steps", c.warmup_steps},
          {"update_every", c.update_every},
          {"hidden", c.hidden}};
}

inline Json to_json(const RainbowConfig& c) {
  return {{"atoms", c.atoms},
          {"v_min", c.v_min},
          {"v_max", c.v_max},
          {"n_step", c.n_step},
          {"per_alpha", c.per_alpha},
          {"per_beta0", c.per_beta0},
          {"per_beta_anneal", c.per_beta_anneal},
          {"per_eps", c.per_eps},
          {"lr", c.lr},
          {"batch", c.batch},
          {"replay_capacity", c.replay_capacity},
          {"warmup_steps", c.warmup_steps},
          {"update_every", c.update_every},
          {"target_sync", c.target_sync},
          {"gamma", c.gamma},
          {"eps_greedy", c.eps_greedy},
          {"trunk_width", c.trunk_width},
          {"stream_width", c.stream_width},
          {"noisy", c.noisy}};
}

inline Json to_json(const RunConfig& c) {
  Json j;
  j["scenario"] = c.scenario;
  j["seeds"] = c.seeds;
  j["agent"] = c.agent;
  j["env"] = {{"obs_range_m", c.env.obs_range},
              {"horizon_steps", c.env.horizon},
              {"dt_s", c.env.dt}};
  j["track"] = to_json(c.env.track);
  j["mobility"] = to_json(c.env.mobility);
  j["dsrc"] = to_json(c.env.channels.dsrc);
  j["headlight"] = to_json(c.env.channels.headlight);
  j["taillight"] = to_json(c.env.channels.taillight);
  j["radio"] = {{"packet_bytes", c.env.channels.packet_bytes},
                {"dsrc_bitrate_mbps", c.env.channels.dsrc_bitrate_mbps},
                {"vlc_bitrate_mbps", c.env.channels.vlc_bitrate_mbps}};
  j["costs"] = {{"dsrc", c.env.costs.dsrc},
                {"headlight", c.env.costs.headlight},
                {"taillight", c.env.costs.taillight}};
  j["ppo"] = to_json(c.ppo);
  j["trpo"] = to_json(c.trpo);
  j["sac"] = to_json(c.sac);
  j["rainbow"] = to_json(c.rainbow);
  j["train"] = {{"episodes", c.train.episodes},
                {"curve_window", c.train.curve_window}};
  j["eval"] = {{"episodes", c.eval.episodes}};
  j["grid"] = {{"seeds", c.grid.seeds}, {"episodes", c.grid.episodes}};
  j["robustness"] = {{"eval_episodes", c.robustness.eval_episodes}};
  j["decision_map"] = {{"distance_min_m", c.decision_map.distance_min},
                       {"distance_max_m", c.decision_map.distance_max},
                       {"distance_bins", c.decision_map.distance_bins},
                       {"bearing_bins", c.decision_map.bearing_bins}};
  return j;
}

// ------------------------------ from_json ---------------------------------

namespace detail {

inline std::string json_type_name(const Json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "bool";
  if (v.is_number()) return "number";
  return "null";
}

/// Overlays user values onto the defaults, rejecting unknown keys and
/// type changes, and naming the exact path in every error.
inline void merge_config(Json& base, const Json& user, const std::string& path) {
  require_config(user.is_object(),
                 "config" + (path.empty() ? "" : " at " + path) +
                     " must be a JSON object");
  for (const auto& [key, value] : user.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    require_config(base.contains(key), "unknown config key: " + sub);
    Json& slot = base[key];
    if (slot.is_object()) {
      merge_config(slot, value, sub);
      continue;
    }
    const bool compatible =
        (slot.is_number() && value.is_number()) ||
        (slot.is_boolean() && value.is_boolean()) ||
        (slot.is_string() && value.is_string()) ||
        (slot.is_array() && value.is_array());
    require_config(compatible, "config key " + sub + " expects " +
                                   json_type_name(slot) + ", got " +
                                   json_type_name(value));
    slot = value;
  }
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return j.at(key).template get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key ") + key + ": " + e.what());
  }
}

}  // namespace detail

inline RunConfig config_from_json(const Json& merged) {
  using detail::get;
  RunConfig c;
  c.scenario = get<int>(merged, "scenario");
  c.seeds = get<std::vector<std::uint64_t>>(merged, "seeds");
  c.agent = get<std::string>(merged, "agent");

  const Json& env = merged.at("env");
  c.env.scenario = c.scenario;
  c.env.obs_range = get<double>(env, "obs_range_m");
  c.env.horizon = get<int>(env, "horizon_steps");
  c.env.dt = get<double>(env, "dt_s");

  const Json& tr = merged.at("track");
  c.env.track.straight_length = get<double>(tr, "straight_length_m");
  c.env.track.hairpin_radius = get<double>(tr, "hairpin_radius_m");
  c.env.track.closing_radius = get<double>(tr, "closing_radius_m");
  c.env.track.hairpin_count = get<int>(tr, "hairpin_count");
  c.env.track.resolution = get<double>(tr, "resolution_m");

  const Json& mo = merged.at("mobility");
  c.env.mobility.speed_min_kmh = get<double>(mo, "speed_min_kmh");
  c.env.mobility.speed_max_kmh = get<double>(mo, "speed_max_kmh");
  c.env.mobility.leader_accel_noise = get<double>(mo, "leader_accel_noise");
  c.env.mobility.follower_accel_noise = get<double>(mo, "follower_accel_noise");
  c.env.mobility.max_accel = get<double>(mo, "max_accel");
  c.env.mobility.gap_kp = get<double>(mo, "gap_kp");
  c.env.mobility.gap_kd = get<double>(mo, "gap_kd");
  c.env.mobility.target_gap = get<double>(mo, "target_gap_m");
  c.env.mobility.min_gap = get<double>(mo, "min_gap_m");
  c.env.mobility.max_gap = get<double>(mo, "max_gap_m");
  c.env.mobility.start_gap = get<double>(mo, "start_gap_m");

  const Json& ds = merged.at("dsrc");
  c.env.channels.dsrc.range_50 = get<double>(ds, "range_50_m");
  c.env.channels.dsrc.steepness = get<double>(ds, "steepness");
  c.env.channels.dsrc.max_range = get<double>(ds, "max_range_m");
  c.env.channels.dsrc.clamp_min = get<double>(ds, "clamp_min");
  c.env.channels.dsrc.clamp_max = get<double>(ds, "clamp_max");

  auto vlc_from = [&](const Json& v) {
    VlcConfig out;
    out.max_range = get<double>(v, "max_range_m");
    out.rolloff = get<double>(v, "rolloff");
    out.half_angle_left_deg = get<double>(v, "half_angle_left_deg");
    out.half_angle_right_deg = get<double>(v, "half_angle_right_deg");
    out.taper_deg = get<double>(v, "taper_deg");
    out.rx_fov_deg = get<double>(v, "rx_fov_deg");
    out.clamp_min = get<double>(v, "clamp_min");
    out.clamp_max = get<double>(v, "clamp_max");
    return out;
  };
  c.env.channels.headlight = vlc_from(merged.at("headlight"));
  c.env.channels.taillight = vlc_from(merged.at("taillight"));

  const Json& ra = merged.at("radio");
  c.env.channels.packet_bytes = get<double>(ra, "packet_bytes");
  c.env.channels.dsrc_bitrate_mbps = get<double>(ra, "dsrc_bitrate_mbps");
  c.env.channels.vlc_bitrate_mbps = get<double>(ra, "vlc_bitrate_mbps");

  const Json& co = merged.at("costs");
  c.env.costs.dsrc = get<double>(co, "dsrc");
  c.env.costs.headlight = get<double>(co, "headlight");
  c.env.costs.taillight = get<double>(co, "taillight");

  const Json& pp = merged.at("ppo");
  c.ppo.lr_actor = get<double>(pp, "lr_actor");
  c.ppo.lr_critic = get<double>(pp, "lr_critic");
  c.ppo.clip = get<double>(pp, "clip");
  c.ppo.gamma = get<double>(pp, "gamma");
  c.ppo.lambda = get<double>(pp, "lambda");
  c.ppo.entropy_coef = get<double>(pp, "entropy_coef");
  c.ppo.epochs = get<int>(pp, "epochs");
  c.ppo.minibatch = get<int>(pp, "minibatch");
  c.ppo.actor_hidden = get<std::vector<int>>(pp, "actor_hidden");
  c.ppo.critic_hidden = get<std::vector<int>>(pp, "critic_hidden");
  c.ppo.normalize_advantages = get<bool>(pp, "normalize_advantages");

  const Json& tp = merged.at("trpo");
  c.trpo.kl_delta = get<double>(tp, "kl_delta");
  c.trpo.hidden_width = get<int>(tp, "hidden_width");
  c.trpo.line_search_max_iter = get<int>(tp, "line_search_max_iter");
  c.trpo.cg_iters = get<int>(tp, "cg_iters");
  c.trpo.cg_damping = get<double>(tp, "cg_damping");
  c.trpo.lr_critic = get<double>(tp, "lr_critic");
  c.trpo.gamma = get<double>(tp, "gamma");
  c.trpo.lambda = get<double>(tp, "lambda");
  c.trpo.critic_epochs = get<int>(tp, "critic_epochs");
  c.trpo.minibatch = get<int>(tp, "minibatch");
  c.trpo.normalize_advantages = get<bool>(tp, "normalize_advantages");

  const Json& sa = merged.at("sac");
  c.sac.tau = get<double>(sa, "tau");
  c.sac.lr = get<double>(sa, "lr");
  c.sac.batch = get<int>(sa, "batch");
  c.sac.alpha = get<double>(sa, "alpha");
  c.sac.gamma = get<double>(sa, "gamma");
  c.sac.replay_capacity = get<std::size_t>(sa, "replay_capacity");
  c.sac.warmup_steps = get<int>(sa, "warmup_steps");
  c.sac.update_every = get<int>(sa, "update_every");
  c.sac.hidden = get<std::vector<int>>(sa, "hidden");

  const Json& rb = merged.at("rainbow");
  c.rainbow.atoms = get<int>(rb, "atoms");
  c.rainbow.v_min = get<double>(rb, "v_min");
  c.rainbow.v_max = get<double>(rb, "v_max");
  c.rainbow.n_step = get<int>(rb, "n_step");
  c.rainbow.per_alpha = get<double>(rb, "per_alpha");
  c.rainbow.per_beta0 = get<double>(rb, "per_beta0");
  c.rainbow.per_beta_anneal = get<long>(rb, "per_beta_anneal");
  c.rainbow.per_eps = get<double>(rb, "per_eps");
  c.rainbow.lr = get<double>(rb, "lr");
  c.rainbow.batch = get<int>(rb, "batch");
  c.rainbow.replay_capacity = get<std::size_t>(rb, "replay_capacity");
  c.rainbow.warmup_steps = get<int>(rb, "warmup_steps");
  c.rainbow.update_every = get<int>(rb, "update_every");
  c.rainbow.target_sync = get<long>(rb, "target_sync");
  c.rainbow.gamma = get<double>(rb, "gamma");
  c.rainbow.eps_greedy = get<double>(rb, "eps_greedy");
  c.rainbow.trunk_width = get<int>(rb, "trunk_width");
  c.rainbow.stream_width = get<int>(rb, "stream_width");
  c.rainbow.noisy = get<bool>(rb, "noisy");

  const Json& tn = merged.at("train");
  c.train.episodes = get<int>(tn, "episodes");
  c.train.curve_window = get<int>(tn, "curve_window");
  c.eval.episodes = get<int>(merged.at("eval"), "episodes");
  const Json& gr = merged.at("grid");
  c.grid.seeds = get<std::vector<std::uint64_t>>(gr, "seeds");
  c.grid.episodes = get<int>(gr, "episodes");
  c.robustness.eval_episodes =
      get<int>(merged.at("robustness"), "eval_episodes");
  const Json& dm = merged.at("decision_map");
  c.decision_map.distance_min = get<double>(dm, "distance_min_m");
  c.decision_map.distance_max = get<double>(dm, "distance_max_m");
  c.decision_map.distance_bins = get<int>(dm, "distance_bins");
  c.decision_map.bearing_bins = get<int>(dm, "bearing_bins");

  validate(c);
  return c;
}

/// Parses a user JSON document (possibly {}), applying defaults for every
/// missing key and validating the result.
inline RunConfig load_config_from_string(const std::string& text) {
  Json user;
  try {
    user = Json::parse(text.empty() ? "{}" : text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Json merged = to_json(RunConfig{});
  detail::merge_config(merged, user, "");
  return config_from_json(merged);
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return load_config_from_string(text);
}

/// The fully-resolved configuration, as written next to run outputs.
/// Reloading the dump reproduces the identical RunConfig.
inline std::string dump_config(const RunConfig& c) {
  return to_json(c).dump(2) + "\n";
}

}  // namespace vholab
