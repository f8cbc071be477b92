// End-to-end tests of the command-line front end: every subcommand is run
// as a child process against tiny configurations, checking output files,
// exit codes, and byte-for-byte reproducibility of repeated runs.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(VHOLAB_BIN) + " " + args +
                          " >cli_stdout.txt 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text("cli_stdout.txt");
  r.err = read_text("cli_stderr.txt");
  return r;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out << text;
}

/// Tiny but non-degenerate run: short episodes, one greedy eval episode.
const char* kTinyConfig = R"({
  "env": {"horizon_steps": 80},
  "train": {"episodes": 4},
  "eval": {"episodes": 1}
})";

void write_tiny_config(const std::string& path) { write_file(path, kTinyConfig); }

bool same_bytes(const std::string& a, const std::string& b) {
  return read_text(a) == read_text(b);
}

}  // namespace

TEST_CASE("cli requires a subcommand and offers help") {
  CHECK(run_cli("").code != 0);
  const CliResult help = run_cli("--help");
  CHECK(help.code == 0);
  for (const std::string name : {"train", "resume", "evaluate", "grid-search",
                                 "robustness", "decision-map", "channel-probe",
                                 "params"}) {
    INFO(name);
    CHECK(help.out.find(name) != std::string::npos);
  }
}

TEST_CASE("cli params prints every agent's parameter count") {
  const CliResult r = run_cli("params");
  CHECK(r.code == 0);
  CHECK(r.out.find("ppo: 9545") != std::string::npos);
  CHECK(r.out.find("trpo: 1225") != std::string::npos);
  CHECK(r.out.find("rainbow: 62689") != std::string::npos);
  CHECK(r.out.find("sac: 207384 trained (276512 including the target copy)") !=
        std::string::npos);
}

TEST_CASE("cli reports config problems with exit code 2") {
  write_file("cli_bad_key.json", R"({"trian": {"episodes": 4}})");
  CliResult r = run_cli("train -c cli_bad_key.json -o cli_bad_out -s 0");
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown config key: trian") != std::string::npos);

  write_file("cli_bad_json.json", "{");
  r = run_cli("train -c cli_bad_json.json -o cli_bad_out -s 0");
  CHECK(r.code == 2);
  CHECK(r.err.find("config error") != std::string::npos);

  r = run_cli("train -c cli_missing.json -o cli_bad_out -s 0");
  CHECK(r.code == 2);

  r = run_cli("train -c cli_bad_key.json -o cli_bad_out -s 0 --agent dqn");
  CHECK(r.code == 2);
  fs::remove("cli_bad_key.json");
  fs::remove("cli_bad_json.json");
}

TEST_CASE("cli reports unreadable checkpoints with exit code 3") {
  CliResult r = run_cli("evaluate -k cli_no_such.bin -o cli_eval_bad");
  CHECK(r.code == 3);
  CHECK(r.err.find("data error") != std::string::npos);

  write_file("cli_not_ckpt.bin", "definitely not a checkpoint, but long enough");
  r = run_cli("evaluate -k cli_not_ckpt.bin -o cli_eval_bad");
  CHECK(r.code == 3);
  CHECK(r.err.find("not a checkpoint file") != std::string::npos);
  fs::remove("cli_not_ckpt.bin");
}

TEST_CASE("cli single-seed training produces the run directory", "[slow]") {
  write_tiny_config("cli_tiny.json");
  fs::remove_all("cli_run_a");
  const CliResult r = run_cli("train -c cli_tiny.json -o cli_run_a -s 0 -q");
  CHECK(r.code == 0);
  CHECK(r.out.find("ppo seed 0") != std::string::npos);

  for (const std::string name :
       {"config_resolved.json", "curve.csv", "diagnostics.csv", "metrics.json",
        "checkpoint_final.bin", "checkpoint_best.bin", "trace.csv"}) {
    INFO(name);
    CHECK(fs::exists("cli_run_a/" + name));
  }
  const json resolved = json::parse(read_text("cli_run_a/config_resolved.json"));
  CHECK(resolved.at("train").at("episodes") == 4);
  CHECK(resolved.at("env").at("horizon_steps") == 80);

  const json metrics = json::parse(read_text("cli_run_a/metrics.json"));
  CHECK(metrics.at("agent") == "ppo");
  CHECK(metrics.at("episodes") == 4);
}

TEST_CASE("cli reruns are byte-identical", "[slow]") {
  write_tiny_config("cli_tiny.json");
  fs::remove_all("cli_run_a");
  fs::remove_all("cli_run_b");
  REQUIRE(run_cli("train -c cli_tiny.json -o cli_run_a -s 0 -q").code == 0);
  REQUIRE(run_cli("train -c cli_tiny.json -o cli_run_b -s 0 -q").code == 0);
  for (const std::string name :
       {"config_resolved.json", "curve.csv", "metrics.json", "trace.csv",
        "checkpoint_final.bin", "checkpoint_best.bin"}) {
    INFO(name);
    CHECK(same_bytes("cli_run_a/" + name, "cli_run_b/" + name));
  }

  // Training from the echoed resolved config must also reproduce the run.
  fs::remove_all("cli_run_c");
  REQUIRE(run_cli("train -c cli_run_a/config_resolved.json -o cli_run_c -s 0 -q")
              .code == 0);
  CHECK(same_bytes("cli_run_a/curve.csv", "cli_run_c/curve.csv"));
  CHECK(same_bytes("cli_run_a/checkpoint_final.bin",
                   "cli_run_c/checkpoint_final.bin"));
}

TEST_CASE("cli resume reaches the same bytes as a full run", "[slow]") {
  write_tiny_config("cli_tiny.json");
  fs::remove_all("cli_res_half");
  fs::remove_all("cli_res_full");
  fs::remove_all("cli_res_cont");
  REQUIRE(run_cli("train -c cli_tiny.json -o cli_res_half -s 5 -q -e 2").code ==
          0);
  REQUIRE(run_cli("train -c cli_tiny.json -o cli_res_full -s 5 -q -e 4").code ==
          0);

  const CliResult r = run_cli(
      "resume -k cli_res_half/checkpoint_final.bin -e 4 -o cli_res_cont -q");
  CHECK(r.code == 0);
  CHECK(r.out.find("resumed 2 -> 4") != std::string::npos);
  CHECK(same_bytes("cli_res_full/checkpoint_final.bin",
                   "cli_res_cont/checkpoint_final.bin"));
  CHECK(same_bytes("cli_res_full/curve.csv", "cli_res_cont/curve.csv"));
}

TEST_CASE("cli evaluation exports metrics for a chosen scenario", "[slow]") {
  write_tiny_config("cli_tiny.json");
  fs::remove_all("cli_run_a");
  REQUIRE(run_cli("train -c cli_tiny.json -o cli_run_a -s 0 -q").code == 0);

  fs::remove_all("cli_eval1");
  CliResult r =
      run_cli("evaluate -k cli_run_a/checkpoint_final.bin -o cli_eval1 -e 2");
  CHECK(r.code == 0);
  CHECK(r.out.find("scenario 1") != std::string::npos);
  CHECK(fs::exists("cli_eval1/trace.csv"));
  const json m = json::parse(read_text("cli_eval1/metrics.json"));
  CHECK(m.at("agent") == "ppo");
  CHECK(m.at("scenario") == 1);
  CHECK(m.at("eval_episodes") == 2);
  CHECK(m.at("per_episode").size() == 2);
  CHECK(m.at("metrics").contains("reliability_pct"));

  fs::remove_all("cli_eval2");
  r = run_cli(
      "evaluate -k cli_run_a/checkpoint_final.bin -o cli_eval2 --scenario 2");
  CHECK(r.code == 0);
  CHECK(r.out.find("scenario 2") != std::string::npos);
  CHECK(json::parse(read_text("cli_eval2/metrics.json")).at("scenario") == 2);
}

TEST_CASE("cli decision map exports the grid and overlap files", "[slow]") {
  write_tiny_config("cli_tiny.json");
  fs::remove_all("cli_run_a");
  REQUIRE(run_cli("train -c cli_tiny.json -o cli_run_a -s 0 -q").code == 0);

  fs::remove_all("cli_map");
  const CliResult r =
      run_cli("decision-map -k cli_run_a/checkpoint_final.bin -o cli_map");
  CHECK(r.code == 0);
  CHECK(fs::exists("cli_map/decision_map.csv"));
  CHECK(fs::exists("cli_map/decision_overlap.csv"));

  const std::string map_csv = read_text("cli_map/decision_map.csv");
  // header plus one row per polar-grid cell (40 x 72 by default)
  CHECK(std::count(map_csv.begin(), map_csv.end(), '\n') == 1 + 40 * 72);

  const json summary = json::parse(read_text("cli_map/decision_summary.json"));
  CHECK(summary.at("agent") == "ppo");
  CHECK(summary.at("grid").at("distance_bins") == 40);
  CHECK(summary.at("visited_cells").get<int>() > 0);
  CHECK(summary.at("map_agreement_pct").get<double>() >= 0.0);
  CHECK(summary.at("multi_action_pct").get<double>() <= 100.0);
}

TEST_CASE("cli channel probe writes the link success grid") {
  fs::remove_all("cli_probe");
  const CliResult r = run_cli("channel-probe -o cli_probe");
  CHECK(r.code == 0);
  const std::string csv = read_text("cli_probe/channel_probe.csv");
  CHECK(csv.rfind("distance_m,bearing_rad,p_dsrc,p_headlight,p_taillight\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 40 * 72);
}

TEST_CASE("cli multi-seed training aggregates the band", "[slow]") {
  write_file("cli_bench.json", R"({
    "env": {"horizon_steps": 80},
    "seeds": [0, 1],
    "agent": "trpo",
    "train": {"episodes": 3},
    "eval": {"episodes": 1}
  })");
  fs::remove_all("cli_bench");
  const CliResult r = run_cli("train -c cli_bench.json -o cli_bench -q");
  CHECK(r.code == 0);
  CHECK(r.out.find("trpo: 2/2 seeds completed") != std::string::npos);
  CHECK(fs::exists("cli_bench/curve_band.csv"));
  CHECK(fs::exists("cli_bench/summary.json"));
  CHECK(fs::exists("cli_bench/seed_0/metrics.json"));
  CHECK(fs::exists("cli_bench/seed_1/metrics.json"));
}

TEST_CASE("cli grid search ranks cells and keeps two checkpoints", "[slow]") {
  write_file("cli_grid.json", R"({
    "env": {"horizon_steps": 60},
    "agent": "ppo",
    "eval": {"episodes": 1},
    "grid": {"seeds": [0], "episodes": 2}
  })");
  fs::remove_all("cli_grid");
  const CliResult r = run_cli("grid-search -c cli_grid.json -o cli_grid -q");
  CHECK(r.code == 0);
  CHECK(r.out.find("ppo grid: 8 cells") != std::string::npos);

  const std::string ranking = read_text("cli_grid/grid_ranking.csv");
  CHECK(std::count(ranking.begin(), ranking.end(), '\n') == 9);  // header + 8
  CHECK(fs::exists("cli_grid/grid_summary.json"));
  CHECK(fs::exists("cli_grid/ckpt_rank1.bin"));
  CHECK(fs::exists("cli_grid/ckpt_rank2.bin"));

  // The kept checkpoints feed straight into the robustness comparison.
  fs::remove_all("cli_robust.json");
  const CliResult rb = run_cli(
      "robustness --rank1 cli_grid/ckpt_rank1.bin --rank2 cli_grid/ckpt_rank2.bin"
      " -e 1 -o cli_robust.json");
  CHECK(rb.code == 0);
  CHECK(rb.out.find("rank1") != std::string::npos);
  const json rob = json::parse(read_text("cli_robust.json"));
  REQUIRE(rob.at("rows").size() == 2);
  CHECK(rob.at("rows")[0].at("name") == "rank1");
  CHECK(rob.at("rows")[0].at("agent") == "ppo");
}
