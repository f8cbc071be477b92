#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vholab/harness/train.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Robustness transfer: evaluate stored policies, without further training,
// on the track they were trained on and on the longer track (scenario 2).
// All policies see the same evaluation episode seeds, derived from a fixed
// stream per scenario, so the comparison is paired.
// ---------------------------------------------------------------------------

inline std::uint64_t robustness_seed(int scenario, int index) {
  return Rng::derive(0x726f62757374ULL,
                     {static_cast<std::uint64_t>(scenario),
                      static_cast<std::uint64_t>(index)})
      .next_u64();
}

struct RobustnessRow {
  std::string name;  // caller-supplied identity, e.g. "rank1"
  std::string kind;
  Metrics scenario1;
  Metrics scenario2;
  double reliability_drop = 0.0;  // scenario1 - scenario2, percentage points
};

/// Greedy evaluation of a stored agent on one scenario.
inline Metrics evaluate_on_scenario(const TrainState& state, int scenario,
                                    int eval_episodes) {
  require(eval_episodes > 0, "evaluate_on_scenario: need at least one episode");
  EnvConfig env_cfg = state.cfg.env;
  env_cfg.scenario = scenario;
  Env env(env_cfg, 0);

  std::unique_ptr<Agent> agent = make_agent(state.kind, state.cfg, 0);
  agent_from_bytes(*agent, state.agent);

  std::vector<Metrics> per_episode;
  for (int i = 0; i < eval_episodes; ++i) {
    const auto trace = greedy_episode(env, *agent, robustness_seed(scenario, i));
    per_episode.push_back(compute_metrics(trace));
  }
  return average_metrics(per_episode);
}

inline RobustnessRow evaluate_robustness(const TrainState& state,
                                         const std::string& name,
                                         int eval_episodes) {
  RobustnessRow row;
  row.name = name;
  row.kind = state.kind;
  row.scenario1 = evaluate_on_scenario(state, 1, eval_episodes);
  row.scenario2 = evaluate_on_scenario(state, 2, eval_episodes);
  row.reliability_drop =
      row.scenario1.reliability_pct - row.scenario2.reliability_pct;
  return row;
}

inline nlohmann::json robustness_to_json(const std::vector<RobustnessRow>& rows,
                                         int eval_episodes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RobustnessRow& r : rows) {
    arr.push_back({{"name", r.name},
                   {"agent", r.kind},
                   {"scenario1", metrics_to_json(r.scenario1)},
                   {"scenario2", metrics_to_json(r.scenario2)},
                   {"reliability_drop_pct", r.reliability_drop}});
  }
  return {{"eval_episodes", eval_episodes}, {"rows", arr}};
}

/// Loads the two top-ranked grid checkpoints and writes robustness.json.
inline std::vector<RobustnessRow> run_robustness(
    const std::string& rank1_path, const std::string& rank2_path,
    int eval_episodes, const std::string& out_path) {
  std::vector<RobustnessRow> rows;
  rows.push_back(evaluate_robustness(load_train_checkpoint(rank1_path), "rank1",
                                     eval_episodes));
  rows.push_back(evaluate_robustness(load_train_checkpoint(rank2_path), "rank2",
                                     eval_episodes));
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << robustness_to_json(rows, eval_episodes).dump(2) << "\n";
  }
  return rows;
}

}  // namespace vholab
