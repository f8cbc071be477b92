#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "vholab/agents/factory.hpp"
#include "vholab/env.hpp"
#include "vholab/harness/curves.hpp"
#include "vholab/harness/metrics.hpp"
#include "vholab/io/checkpoint.hpp"
#include "vholab/io/config.hpp"
#include "vholab/io/csv.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Single-seed training driver.  Every episode reseeds the environment from a
// stream derived from (run seed, episode index), so a run is a pure function
// of its configuration and seed, and resuming from a checkpoint replays the
// identical remainder: the checkpoint carries the agent state, the learning
// curve so far and the best-window tracking state.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kTagEpisode = 0x6570ULL;   // training episodes
inline constexpr std::uint64_t kTagEval = 0x6576616cULL;  // greedy evaluation

inline std::uint64_t episode_seed(std::uint64_t run_seed, long episode) {
  return Rng::derive(run_seed, {kTagEpisode, static_cast<std::uint64_t>(episode)})
      .next_u64();
}

inline std::uint64_t eval_seed(std::uint64_t run_seed, int index) {
  return Rng::derive(run_seed, {kTagEval, static_cast<std::uint64_t>(index)})
      .next_u64();
}

inline std::vector<std::uint8_t> agent_to_bytes(const Agent& agent) {
  BinWriter w;
  agent.serialize(w);
  return w.bytes();
}

inline void agent_from_bytes(Agent& agent, const std::vector<std::uint8_t>& bytes) {
  BinReader r(bytes);
  agent.deserialize(r);
  if (!r.exhausted())
    throw DataError("agent state has trailing bytes (wrong agent kind?)");
}

// ------------------------- checkpoint payload ------------------------------

inline constexpr const char* kTrainPayloadTag = "vholab/train";

/// Everything needed to reproduce the remainder of an interrupted run.
struct TrainState {
  std::string kind;
  RunConfig cfg;
  std::uint64_t run_seed = 0;
  long episodes_done = 0;
  std::vector<double> curve;
  double best_mean = -std::numeric_limits<double>::infinity();
  long best_episode = -1;
  std::vector<std::uint8_t> best_agent;  // empty until a window completes
  std::vector<std::uint8_t> agent;
};

inline std::vector<std::uint8_t> pack_train_state(const TrainState& s) {
  BinWriter w;
  w.str(kTrainPayloadTag);
  w.str(s.kind);
  w.str(dump_config(s.cfg));
  w.u64(s.run_seed);
  w.i64(s.episodes_done);
  w.doubles(s.curve.data(), s.curve.size());
  w.f64(s.best_mean);
  w.i64(s.best_episode);
  w.blob(s.best_agent);
  w.blob(s.agent);
  return w.bytes();
}

inline TrainState parse_train_state(const std::vector<std::uint8_t>& payload) {
  BinReader r(payload);
  const std::string tag = r.str();
  if (tag != kTrainPayloadTag)
    throw DataError("checkpoint payload is not a training state (tag '" + tag +
                    "')");
  TrainState s;
  s.kind = r.str();
  s.cfg = load_config_from_string(r.str());
  s.run_seed = r.u64();
  s.episodes_done = r.i64();
  s.curve = r.doubles();
  s.best_mean = r.f64();
  s.best_episode = r.i64();
  s.best_agent = r.blob();
  s.agent = r.blob();
  if (!r.exhausted())
    throw DataError("corrupt checkpoint payload: trailing bytes");
  if (s.episodes_done < 0 ||
      s.curve.size() != static_cast<std::size_t>(s.episodes_done))
    throw DataError("corrupt checkpoint payload: curve length mismatch");
  return s;
}

inline TrainState load_train_checkpoint(const std::string& path) {
  return parse_train_state(read_checkpoint(path));
}

// ------------------------------ training -----------------------------------

struct TrainResult {
  std::vector<double> curve;
  double final_window_mean = std::numeric_limits<double>::quiet_NaN();
  Metrics eval_metrics;
  std::vector<Metrics> eval_per_episode;
  std::vector<Transition> eval_trace;  // first greedy episode
  bool failed = false;
  std::string error;
  double train_seconds = 0.0;
  std::vector<std::uint8_t> final_payload;  // pack_train_state of the end state
};

struct TrainOptions {
  std::string out_dir;                    ///< empty: keep everything in memory
  std::ostream* progress = nullptr;       ///< per-episode status lines
  const TrainState* resume = nullptr;     ///< continue a stored run
  int progress_every = 10;
};

/// Runs one greedy episode and returns its transition trace.
inline std::vector<Transition> greedy_episode(Env& env, Agent& agent,
                                              std::uint64_t seed) {
  std::vector<Transition> trace;
  trace.reserve(static_cast<std::size_t>(env.config().horizon));
  Observation obs = env.reset(seed);
  while (!env.done()) {
    const int a = agent.act(obs, /*explore=*/false);
    Transition t = env.step(a);
    obs = t.next_obs;
    trace.push_back(std::move(t));
  }
  return trace;
}

inline void write_trace_csv(const std::string& path,
                            const std::vector<Transition>& trace) {
  CsvWriter csv(path,
                {"step", "X", "Y", "cos_phi", "sin_phi", "action_id", "reward",
                 "success", "p_dsrc", "p_head", "p_tail", "distance"});
  for (const Transition& t : trace) {
    csv.field(t.info.step);
    csv.field(t.obs.x);
    csv.field(t.obs.y);
    csv.field(t.obs.cos_phi);
    csv.field(t.obs.sin_phi);
    csv.field(t.action_id);
    csv.field(t.reward);
    csv.field(t.info.success ? 1 : 0);
    csv.field(t.info.p_dsrc);
    csv.field(t.info.p_headlight);
    csv.field(t.info.p_taillight);
    csv.field(t.info.distance);
    csv.end_row();
  }
}

inline TrainResult train_run(const RunConfig& cfg, const std::string& kind,
                             std::uint64_t seed, const TrainOptions& opt = {}) {
  validate(cfg);
  const auto t_start = std::chrono::steady_clock::now();

  std::unique_ptr<Agent> agent = make_agent(kind, cfg, seed);

  TrainResult result;
  double best_mean = -std::numeric_limits<double>::infinity();
  long best_episode = -1;
  std::vector<std::uint8_t> best_agent;
  long start_episode = 0;

  if (opt.resume != nullptr) {
    const TrainState& s = *opt.resume;
    require(s.kind == kind, "resume checkpoint is for agent '" + s.kind +
                                "', requested '" + kind + "'");
    require(s.run_seed == seed, "resume checkpoint was trained with a "
                                "different run seed");
    require(s.curve.size() == static_cast<std::size_t>(s.episodes_done),
            "resume checkpoint curve length disagrees with episodes_done");
    agent_from_bytes(*agent, s.agent);
    result.curve = s.curve;
    best_mean = s.best_mean;
    best_episode = s.best_episode;
    best_agent = s.best_agent;
    start_episode = s.episodes_done;
  }

  const bool to_disk = !opt.out_dir.empty();
  std::unique_ptr<CsvWriter> curve_csv;
  std::unique_ptr<CsvWriter> diag_csv;
  if (to_disk) {
    std::filesystem::create_directories(opt.out_dir);
    curve_csv = std::make_unique<CsvWriter>(
        opt.out_dir + "/curve.csv",
        std::vector<std::string>{"episode", "return", "trailing_mean"});
    std::vector<std::string> diag_header = {"episode"};
    for (const std::string& h : agent->diagnostics_header())
      diag_header.push_back(h);
    diag_csv = std::make_unique<CsvWriter>(opt.out_dir + "/diagnostics.csv",
                                           diag_header);
    // A resumed run still documents the full curve: replay the restored
    // episodes so curve.csv matches an uninterrupted run byte for byte.
    std::vector<double> prefix;
    prefix.reserve(static_cast<std::size_t>(start_episode));
    for (long ep = 0; ep < start_episode; ++ep) {
      prefix.push_back(result.curve[static_cast<std::size_t>(ep)]);
      curve_csv->field(static_cast<int>(ep));
      curve_csv->field(prefix.back());
      curve_csv->field(trailing_mean(prefix, cfg.train.curve_window));
      curve_csv->end_row();
    }
  }

  Env env(cfg.env, seed);
  const long episodes = cfg.train.episodes;

  for (long ep = start_episode; ep < episodes; ++ep) {
    double ep_return = 0.0;
    try {
      Observation obs = env.reset(episode_seed(seed, ep));
      while (!env.done()) {
        const int a = agent->act(obs, /*explore=*/true);
        const Transition t = env.step(a);
        agent->observe_step(t);
        ep_return += t.reward;
        obs = t.next_obs;
      }
      agent->on_episode_end();
    } catch (const NumericError& e) {
      result.failed = true;
      result.error = std::string("episode ") + std::to_string(ep) + ": " +
                     e.what();
      if (opt.progress != nullptr)
        *opt.progress << "[" << kind << " seed=" << seed
                      << "] diverged: " << result.error << "\n";
      break;
    }

    result.curve.push_back(ep_return);
    const double trailing = trailing_mean(result.curve, cfg.train.curve_window);

    if (curve_csv) {
      curve_csv->field(static_cast<int>(ep));
      curve_csv->field(ep_return);
      curve_csv->field(trailing);
      curve_csv->end_row();
    }
    if (diag_csv) {
      for (const auto& row : agent->take_diagnostics()) {
        diag_csv->field(static_cast<int>(ep));
        for (double v : row) diag_csv->field(v);
        diag_csv->end_row();
      }
    } else {
      agent->take_diagnostics();  // drain either way
    }

    if (trailing > best_mean) {
      best_mean = trailing;
      best_episode = ep;
      best_agent = agent_to_bytes(*agent);
    }

    if (opt.progress != nullptr &&
        (ep % std::max(1, opt.progress_every) == 0 || ep + 1 == episodes)) {
      *opt.progress << "[" << kind << " seed=" << seed << "] episode " << ep
                    << "/" << episodes << " return=" << ep_return
                    << " trailing=" << trailing << "\n";
    }
  }

  if (curve_csv) curve_csv->flush();
  if (diag_csv) diag_csv->flush();

  if (!result.curve.empty())
    result.final_window_mean =
        trailing_mean(result.curve, cfg.train.curve_window);

  // Greedy evaluation on held-out episode seeds; learner state is untouched.
  if (!result.failed) {
    std::vector<Metrics> per_episode;
    for (int i = 0; i < cfg.eval.episodes; ++i) {
      std::vector<Transition> trace =
          greedy_episode(env, *agent, eval_seed(seed, i));
      per_episode.push_back(compute_metrics(trace));
      if (i == 0) result.eval_trace = std::move(trace);
    }
    result.eval_per_episode = per_episode;
    result.eval_metrics = average_metrics(per_episode);
  }

  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  TrainState final_state;
  final_state.kind = kind;
  final_state.cfg = cfg;
  final_state.run_seed = seed;
  final_state.episodes_done = static_cast<long>(result.curve.size());
  final_state.curve = result.curve;
  final_state.best_mean = best_mean;
  final_state.best_episode = best_episode;
  final_state.best_agent = best_agent;
  final_state.agent = agent_to_bytes(*agent);
  result.final_payload = pack_train_state(final_state);

  if (to_disk) {
    write_checkpoint(opt.out_dir + "/checkpoint_final.bin",
                     result.final_payload);
    if (best_episode >= 0) {
      // A loadable snapshot of the best trailing-window agent.  Best-window
      // tracking restarts if training is resumed from this snapshot.
      TrainState best_state;
      best_state.kind = kind;
      best_state.cfg = cfg;
      best_state.run_seed = seed;
      best_state.episodes_done = best_episode + 1;
      best_state.curve.assign(result.curve.begin(),
                              result.curve.begin() + best_episode + 1);
      best_state.best_mean = best_mean;
      best_state.best_episode = best_episode;
      best_state.agent = best_agent;
      write_checkpoint(opt.out_dir + "/checkpoint_best.bin",
                       pack_train_state(best_state));
    }

    nlohmann::json j;
    j["agent"] = kind;
    j["run_seed"] = seed;
    j["scenario"] = cfg.env.scenario;
    j["episodes"] = result.curve.size();
    j["curve_window"] = cfg.train.curve_window;
    j["final_window_mean"] = result.final_window_mean;
    j["param_count"] = agent->param_count();
    j["failed"] = result.failed;
    if (result.failed) j["error"] = result.error;
    if (!result.failed) {
      j["eval_episodes"] = cfg.eval.episodes;
      j["metrics"] = metrics_to_json(result.eval_metrics);
      nlohmann::json per = nlohmann::json::array();
      for (const Metrics& m : result.eval_per_episode)
        per.push_back(metrics_to_json(m));
      j["per_episode"] = per;
    }
    std::ofstream out(opt.out_dir + "/metrics.json");
    if (!out) throw DataError("cannot write " + opt.out_dir + "/metrics.json");
    out << j.dump(2) << "\n";

    if (!result.eval_trace.empty())
      write_trace_csv(opt.out_dir + "/trace.csv", result.eval_trace);
  }

  return result;
}

/// Restores a stored run and extends it to the episode budget in `episodes`
/// (the rest of the configuration is taken from the checkpoint, so the
/// architecture always matches the stored weights).
inline TrainResult resume_run(const TrainState& state, int episodes,
                              const TrainOptions& opt = {}) {
  RunConfig cfg = state.cfg;
  cfg.train.episodes = episodes;
  TrainOptions o = opt;
  o.resume = &state;
  return train_run(cfg, state.kind, state.run_seed, o);
}

}  // namespace vholab
