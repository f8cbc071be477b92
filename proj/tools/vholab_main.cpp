// Command-line front end: training, evaluation, hyperparameter search and
// the policy-analysis exports, all driven by one JSON configuration file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vholab/harness/benchmark.hpp"
#include "vholab/harness/decision_map.hpp"
#include "vholab/harness/grid.hpp"
#include "vholab/harness/robustness.hpp"

namespace {

using namespace vholab;

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config_file(path);
}

void set_scenario(RunConfig& cfg, int scenario) {
  cfg.scenario = scenario;
  cfg.env.scenario = scenario;
}

void write_resolved(const RunConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/config_resolved.json");
  if (!out) throw DataError("cannot write " + dir + "/config_resolved.json");
  out << dump_config(cfg);
}

int run(int argc, char** argv) {
  CLI::App app{"Hybrid DSRC/VLC link-selection laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, agent_override, ckpt_path;
  std::string rank1_path, rank2_path;
  int scenario = 0;      // 0: keep configured/stored
  int episodes = -1;     // -1: keep configured/stored
  std::int64_t seed = -1;
  bool quiet = false;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config,-c", config_path, "JSON config file (default config when omitted)");
    auto* o = cmd->add_option("--out,-o", out_dir, "output directory");
    if (needs_out) o->required();
    cmd->add_flag("--quiet,-q", quiet, "suppress progress output");
  };

  auto* cmd_train = app.add_subcommand(
      "train", "train one agent; all configured seeds unless --seed is given");
  add_common(cmd_train, true);
  cmd_train->add_option("--agent,-a", agent_override, "agent kind override");
  cmd_train->add_option("--seed,-s", seed, "train a single seed");
  cmd_train->add_option("--scenario", scenario, "track scenario override");
  cmd_train->add_option("--episodes,-e", episodes, "episode budget override");

  auto* cmd_resume = app.add_subcommand(
      "resume", "continue a stored training run to a new episode budget");
  cmd_resume->add_option("--checkpoint,-k", ckpt_path, "training checkpoint")
      ->required();
  cmd_resume->add_option("--episodes,-e", episodes, "total episode budget")
      ->required();
  cmd_resume->add_option("--out,-o", out_dir, "output directory")->required();
  cmd_resume->add_flag("--quiet,-q", quiet, "suppress progress output");

  auto* cmd_eval = app.add_subcommand(
      "evaluate", "greedy evaluation of a stored policy");
  cmd_eval->add_option("--checkpoint,-k", ckpt_path, "training checkpoint")
      ->required();
  cmd_eval->add_option("--out,-o", out_dir, "output directory")->required();
  cmd_eval->add_option("--episodes,-e", episodes, "evaluation episodes");
  cmd_eval->add_option("--scenario", scenario, "evaluate on this scenario");

  auto* cmd_grid = app.add_subcommand(
      "grid-search", "rank the hyperparameter grid for one agent");
  add_common(cmd_grid, true);
  cmd_grid->add_option("--agent,-a", agent_override, "agent kind override");

  auto* cmd_robust = app.add_subcommand(
      "robustness", "evaluate two stored policies on both track scenarios");
  cmd_robust->add_option("--rank1", rank1_path, "top-ranked checkpoint")
      ->required();
  cmd_robust->add_option("--rank2", rank2_path, "runner-up checkpoint")
      ->required();
  cmd_robust->add_option("--episodes,-e", episodes, "evaluation episodes");
  cmd_robust->add_option("--out,-o", out_dir, "output JSON file")->required();

  auto* cmd_map = app.add_subcommand(
      "decision-map", "export the greedy action map and trace overlap");
  cmd_map->add_option("--checkpoint,-k", ckpt_path, "training checkpoint")
      ->required();
  cmd_map->add_option("--out,-o", out_dir, "output directory")->required();

  auto* cmd_probe = app.add_subcommand(
      "channel-probe", "export link success probabilities on the polar grid");
  add_common(cmd_probe, true);

  auto* cmd_params = app.add_subcommand(
      "params", "print the parameter count of every agent");
  cmd_params->add_option("--config,-c", config_path, "JSON config file");

  CLI11_PARSE(app, argc, argv);
  std::ostream* progress = quiet ? nullptr : &std::cerr;

  if (app.got_subcommand(cmd_train)) {
    RunConfig cfg = load_or_default(config_path);
    if (!agent_override.empty()) cfg.agent = agent_override;
    if (scenario != 0) set_scenario(cfg, scenario);
    if (episodes >= 0) cfg.train.episodes = episodes;
    validate(cfg);
    write_resolved(cfg, out_dir);
    if (seed >= 0) {
      TrainOptions opt;
      opt.out_dir = out_dir;
      opt.progress = progress;
      const TrainResult r =
          train_run(cfg, cfg.agent, static_cast<std::uint64_t>(seed), opt);
      if (r.failed) {
        std::cout << cfg.agent << " seed " << seed << " diverged: " << r.error
                  << "\n";
        return 1;
      }
      std::cout << cfg.agent << " seed " << seed
                << ": final_window_mean=" << r.final_window_mean
                << " reliability=" << r.eval_metrics.reliability_pct << "%\n";
    } else {
      const BenchmarkResult b =
          benchmark_agent(cfg, cfg.agent, out_dir, progress);
      std::cout << cfg.agent << ": " << b.completed << "/" << b.seeds.size()
                << " seeds completed";
      if (b.completed > 0)
        std::cout << ", mean_final=" << b.mean_final
                  << ", reliability=" << b.metrics.reliability_pct << "%";
      std::cout << "\n";
      if (b.completed == 0) return 1;
    }
    return 0;
  }

  if (app.got_subcommand(cmd_resume)) {
    const TrainState state = load_train_checkpoint(ckpt_path);
    TrainOptions opt;
    opt.out_dir = out_dir;
    opt.progress = progress;
    RunConfig cfg = state.cfg;
    cfg.train.episodes = episodes;
    write_resolved(cfg, out_dir);
    const TrainResult r = resume_run(state, episodes, opt);
    if (r.failed) {
      std::cout << state.kind << " resume diverged: " << r.error << "\n";
      return 1;
    }
    std::cout << state.kind << " resumed " << state.episodes_done << " -> "
              << r.curve.size()
              << " episodes: final_window_mean=" << r.final_window_mean << "\n";
    return 0;
  }

  if (app.got_subcommand(cmd_eval)) {
    const TrainState state = load_train_checkpoint(ckpt_path);
    const int scen = scenario != 0 ? scenario : state.cfg.env.scenario;
    const int n = episodes > 0 ? episodes : state.cfg.eval.episodes;

    EnvConfig env_cfg = state.cfg.env;
    env_cfg.scenario = scen;
    Env env(env_cfg, 0);
    auto agent = make_agent(state.kind, state.cfg, 0);
    agent_from_bytes(*agent, state.agent);

    std::filesystem::create_directories(out_dir);
    std::vector<Metrics> per_episode;
    for (int i = 0; i < n; ++i) {
      const auto trace = greedy_episode(env, *agent, robustness_seed(scen, i));
      per_episode.push_back(compute_metrics(trace));
      if (i == 0) write_trace_csv(out_dir + "/trace.csv", trace);
    }
    const Metrics m = average_metrics(per_episode);

    nlohmann::json j;
    j["agent"] = state.kind;
    j["scenario"] = scen;
    j["eval_episodes"] = n;
    j["metrics"] = metrics_to_json(m);
    nlohmann::json per = nlohmann::json::array();
    for (const Metrics& e : per_episode) per.push_back(metrics_to_json(e));
    j["per_episode"] = per;
    std::ofstream out(out_dir + "/metrics.json");
    if (!out) throw DataError("cannot write " + out_dir + "/metrics.json");
    out << j.dump(2) << "\n";

    std::cout << state.kind << " scenario " << scen
              << ": reliability=" << m.reliability_pct
              << "% headlight=" << m.headlight_rate_pct
              << "% switches=" << m.switch_count << "\n";
    return 0;
  }

  if (app.got_subcommand(cmd_grid)) {
    RunConfig cfg = load_or_default(config_path);
    if (!agent_override.empty()) cfg.agent = agent_override;
    validate(cfg);
    write_resolved(cfg, out_dir);
    const GridReport rep = grid_search(cfg, cfg.agent, out_dir, progress);
    std::cout << cfg.agent << " grid: " << rep.cells.size() << " cells";
    if (!rep.ranking.empty()) {
      const GridCellResult& top = rep.cells[rep.ranking.front()];
      std::cout << ", best " << top.label;
      if (top.completed > 0) std::cout << " (mean_final=" << top.mean_final << ")";
    }
    std::cout << "\n";
    return 0;
  }

  if (app.got_subcommand(cmd_robust)) {
    const int n = episodes > 0 ? episodes : 30;
    const auto rows = run_robustness(rank1_path, rank2_path, n, out_dir);
    for (const RobustnessRow& r : rows)
      std::cout << r.name << " (" << r.kind
                << "): scenario1=" << r.scenario1.reliability_pct
                << "% scenario2=" << r.scenario2.reliability_pct
                << "% drop=" << r.reliability_drop << "pp\n";
    return 0;
  }

  if (app.got_subcommand(cmd_map)) {
    const TrainState state = load_train_checkpoint(ckpt_path);
    auto agent = make_agent(state.kind, state.cfg, 0);
    agent_from_bytes(*agent, state.agent);
    const DecisionMapParams& p = state.cfg.decision_map;

    std::filesystem::create_directories(out_dir);
    const auto points = decision_map(*agent, p, state.cfg.env);
    write_decision_map_csv(out_dir + "/decision_map.csv", points);

    Env env(state.cfg.env, 0);
    const auto trace = greedy_episode(
        env, *agent, robustness_seed(state.cfg.env.scenario, 0));
    const OverlapReport rep = overlap_report(trace, p);
    write_overlap_csv(out_dir + "/decision_overlap.csv", rep);

    nlohmann::json j;
    j["agent"] = state.kind;
    j["scenario"] = state.cfg.env.scenario;
    j["grid"] = {{"distance_bins", p.distance_bins},
                 {"bearing_bins", p.bearing_bins},
                 {"distance_min_m", p.distance_min},
                 {"distance_max_m", p.distance_max}};
    j["visited_cells"] = rep.visited;
    j["multi_action_cells"] = rep.multi_action;
    j["multi_action_pct"] = rep.multi_action_pct;
    j["map_agreement_pct"] = map_agreement_pct(points, rep, p);
    std::ofstream out(out_dir + "/decision_summary.json");
    if (!out)
      throw DataError("cannot write " + out_dir + "/decision_summary.json");
    out << j.dump(2) << "\n";

    std::cout << state.kind << " decision map: " << rep.visited
              << " visited cells, " << rep.multi_action_pct
              << "% with multiple actions\n";
    return 0;
  }

  if (app.got_subcommand(cmd_probe)) {
    const RunConfig cfg = load_or_default(config_path);
    validate(cfg);
    const DecisionMapParams& p = cfg.decision_map;
    std::filesystem::create_directories(out_dir);
    CsvWriter csv(out_dir + "/channel_probe.csv",
                  {"distance_m", "bearing_rad", "p_dsrc", "p_headlight",
                   "p_taillight"});
    const double dw = (p.distance_max - p.distance_min) / p.distance_bins;
    const double bw = 2.0 * kPi / p.bearing_bins;
    for (int i = 0; i < p.distance_bins; ++i) {
      const double d = p.distance_min + (i + 0.5) * dw;
      for (int j = 0; j < p.bearing_bins; ++j) {
        const double b = -kPi + (j + 0.5) * bw;
        const RelGeometry g = aligned_geometry(d, b);
        csv.field(d);
        csv.field(b);
        csv.field(dsrc_success(g, cfg.env.channels.dsrc));
        csv.field(headlight_success(g, cfg.env.channels.headlight));
        csv.field(taillight_success(g, cfg.env.channels.taillight));
        csv.end_row();
      }
    }
    csv.flush();
    std::cout << "wrote " << out_dir << "/channel_probe.csv\n";
    return 0;
  }

  if (app.got_subcommand(cmd_params)) {
    const RunConfig cfg = load_or_default(config_path);
    validate(cfg);
    for (const std::string kind : {"ppo", "trpo", "sac", "rainbow"}) {
      auto agent = make_agent(kind, cfg, 0);
      std::cout << kind << ": " << agent->param_count();
      if (kind == "sac") {
        const auto* sac = dynamic_cast<const SacAgent*>(agent.get());
        std::cout << " trained (" << sac->param_count_with_target()
                  << " including the target copy)";
      }
      std::cout << "\n";
    }
    return 0;
  }

  return 0;  // unreachable: a subcommand is required
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vholab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vholab::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
