// Whole-library smoke test: every public header compiles together and a
// miniature end-to-end run of each subsystem finishes without errors.

#include <catch2/catch_amalgamated.hpp>

#include "vholab/agents/factory.hpp"
#include "vholab/harness/benchmark.hpp"
#include "vholab/harness/decision_map.hpp"
#include "vholab/harness/grid.hpp"
#include "vholab/harness/robustness.hpp"

using namespace vholab;

namespace {

/// Small configuration that keeps smoke runs fast.
RunConfig tiny_config() {
  RunConfig cfg;
  cfg.env.horizon = 40;
  cfg.train.episodes = 2;
  cfg.train.curve_window = 2;
  cfg.eval.episodes = 1;
  cfg.seeds = {0, 1};
  cfg.sac.warmup_steps = 8;
  cfg.sac.update_every = 16;
  cfg.rainbow.warmup_steps = 8;
  cfg.rainbow.update_every = 16;
  return cfg;
}

}  // namespace

TEST_CASE("environment steps and terminates") {
  RunConfig cfg = tiny_config();
  Env env(cfg.env, 7);
  Observation obs = env.reset(7);
  int steps = 0;
  double last_reward = 0.0;
  while (!env.done()) {
    Transition t = env.step(steps % kNumActions);
    obs = t.next_obs;
    last_reward = t.reward;
    ++steps;
  }
  (void)obs;
  (void)last_reward;
  CHECK(steps == cfg.env.horizon);
}

TEST_CASE("every agent trains a miniature run") {
  const RunConfig cfg = tiny_config();
  for (const std::string kind : {"ppo", "trpo", "sac", "rainbow"}) {
    INFO("agent " << kind);
    const TrainResult r = train_run(cfg, kind, 3, {});
    CHECK_FALSE(r.failed);
    CHECK(r.curve.size() == 2);
    CHECK(r.eval_trace.size() == 40);
    CHECK(std::isfinite(r.final_window_mean));
  }
}

TEST_CASE("decision map covers the grid") {
  RunConfig cfg = tiny_config();
  cfg.decision_map.distance_bins = 5;
  cfg.decision_map.bearing_bins = 8;
  auto agent = make_agent("ppo", cfg, 11);
  const auto points = decision_map(*agent, cfg.decision_map, cfg.env);
  CHECK(points.size() == 40);
  for (const auto& pt : points) {
    CHECK(pt.action >= 0);
    CHECK(pt.action < kNumActions);
  }
}
