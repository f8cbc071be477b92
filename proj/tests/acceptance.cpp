// Acceptance gate: one pass/fail line per release criterion, pinned
// tolerances, nonzero exit when anything fails.
//
// Training artifacts (5-seed benchmarks, hyperparameter grids) are cached
// under --cache DIR (default ./acceptance_cache), so an interrupted run
// resumes instead of retraining, and reruns after code-free changes are
// cheap.  Delete the cache after any change that affects training.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/gradcheck.hpp"
#include "vholab/harness/benchmark.hpp"
#include "vholab/harness/grid.hpp"
#include "vholab/harness/robustness.hpp"

using namespace vholab;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure(bool cond, const std::string& msg) {
  if (!cond) throw Failure(msg);
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::vector<char> read_file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  ensure(bool(in), "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --------------------------------------------------------------- caching --

std::string g_cache = "acceptance_cache";

struct SeedRun {
  std::vector<double> curve;
  Metrics metrics;
  double seconds = 0.0;
};

Metrics metrics_from_json(const Json& j) {
  Metrics m;
  m.reliability_pct = j.at("reliability_pct").get<double>();
  m.mean_reward = j.at("mean_reward").get<double>();
  m.headlight_rate_pct = j.at("headlight_rate_pct").get<double>();
  m.taillight_rate_pct = j.at("taillight_rate_pct").get<double>();
  m.dsrc_rate_pct = j.at("dsrc_rate_pct").get<double>();
  m.vlc_rate_pct = j.at("vlc_rate_pct").get<double>();
  m.no_redundancy_pct = j.at("no_redundancy_pct").get<double>();
  m.idle_rate_pct = j.at("idle_rate_pct").get<double>();
  m.mean_links = j.at("mean_links").get<double>();
  m.mean_airtime_ms = j.at("mean_airtime_ms").get<double>();
  m.switch_count = j.at("switch_count").get<double>();
  return m;
}

/// One default-configuration training run (300 episodes, scenario 1),
/// loaded from the cache when present.
SeedRun bench_run(const std::string& kind, std::uint64_t seed) {
  const fs::path path =
      fs::path(g_cache) / ("bench_" + kind + "_seed" + std::to_string(seed) + ".json");
  if (fs::exists(path)) {
    Json j = Json::parse(std::ifstream(path));
    SeedRun r;
    r.curve = j.at("curve").get<std::vector<double>>();
    r.metrics = metrics_from_json(j.at("metrics"));
    r.seconds = j.at("train_seconds").get<double>();
    return r;
  }

  RunConfig cfg;
  std::cout << "  [train] " << kind << " seed " << seed << " ("
            << cfg.train.episodes << " episodes)..." << std::flush;
  TrainResult run = train_run(cfg, kind, seed, {});
  ensure(!run.failed, kind + " seed " + std::to_string(seed) +
                          " diverged: " + run.error);
  std::cout << " done in " << fmt(run.train_seconds, 4) << "s\n" << std::flush;

  Json j;
  j["curve"] = run.curve;
  j["metrics"] = metrics_to_json(run.eval_metrics);
  j["train_seconds"] = run.train_seconds;
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << "\n";

  SeedRun r;
  r.curve = std::move(run.curve);
  r.metrics = run.eval_metrics;
  r.seconds = run.train_seconds;
  return r;
}

const std::vector<std::string> kKinds = {"ppo", "trpo", "sac", "rainbow"};

std::map<std::string, std::vector<SeedRun>> g_bench;

const std::vector<SeedRun>& bench(const std::string& kind) {
  auto it = g_bench.find(kind);
  if (it != g_bench.end()) return it->second;
  RunConfig cfg;
  std::vector<SeedRun> runs;
  for (std::uint64_t seed : cfg.seeds) runs.push_back(bench_run(kind, seed));
  return g_bench.emplace(kind, std::move(runs)).first->second;
}

double mean_over_seeds(const std::vector<SeedRun>& runs,
                       const std::function<double(const SeedRun&)>& f) {
  double sum = 0.0;
  for (const SeedRun& r : runs) sum += f(r);
  return sum / static_cast<double>(runs.size());
}

// ------------------------------------------------------------- criteria --

std::string c1_param_counts() {
  const auto t0 = std::chrono::steady_clock::now();
  PpoAgent ppo({}, 0);
  TrpoAgent trpo({}, 0);
  SacAgent sac({}, 0);
  RainbowAgent rainbow({}, 0);
  ensure(ppo.param_count() == 9545,
         "ppo count " + std::to_string(ppo.param_count()) + " != 9545");
  ensure(trpo.param_count() == 1225,
         "trpo count " + std::to_string(trpo.param_count()) + " != 1225");
  ensure(rainbow.param_count() == 62689,
         "rainbow count " + std::to_string(rainbow.param_count()) + " != 62689");
  ensure(sac.param_count_with_target() == 276512,
         "sac 4-network count " + std::to_string(sac.param_count_with_target()) +
             " != 276512");
  ensure(sac.param_count() == 207384,
         "sac optimized count " + std::to_string(sac.param_count()) +
             " != 207384");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ensure(secs < 1.0, "took " + fmt(secs) + "s (budget 1s)");
  return "ppo 9545, trpo 1225, rainbow 62689, sac 276512/207384 in " +
         fmt(secs) + "s";
}

std::string c2_gradients() {
  const auto res = gradcheck::run_standard_checks(2024, 600);
  ensure(res.nets_checked >= 20, "only " + std::to_string(res.nets_checked) +
                                     " nets checked (need >= 20)");
  ensure(res.max_rel_err < 1e-4, "max relative error " + fmt(res.max_rel_err) +
                                     " >= 1e-4 (" + res.worst_label + ")");
  return std::to_string(res.nets_checked) + " nets, " +
         std::to_string(res.coords_checked) + " coordinates, max rel err " +
         fmt(res.max_rel_err) + " (" + res.worst_label + ")";
}

double oracle_projection() {
  Rng rng(61);
  const Support support{25, -1.0, 1.0};
  double worst = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    Vector p(support.atoms);
    for (int j = 0; j < support.atoms; ++j) p(j) = rng.uniform() + 1e-4;
    p /= p.sum();
    const double reward = rng.uniform(-2.0, 2.0);
    const double discount = std::pow(0.93, 1.0 + rng.uniform_int(3));
    const bool done = rng.uniform() < 0.3;
    const Vector got = categorical_project(p, reward, discount, done, support);

    // Independent oracle: triangular hat kernel around every support atom.
    const double dz = support.delta();
    Vector want = Vector::Zero(support.atoms);
    for (int j = 0; j < support.atoms; ++j) {
      const double tz = clip(reward + (done ? 0.0 : discount * support.z(j)),
                             support.v_min, support.v_max);
      for (int i = 0; i < support.atoms; ++i) {
        const double w = 1.0 - std::abs(tz - support.z(i)) / dz;
        if (w > 0.0) want(i) += p(j) * w;
      }
    }
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(got.sum() - 1.0));
  }
  ensure(worst < 1e-12, "projection error " + fmt(worst) + " >= 1e-12");
  return worst;
}

double oracle_gae() {
  Rng rng(17);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int t_len = 1 + static_cast<int>(rng.uniform_int(80));
    std::vector<double> rewards(static_cast<std::size_t>(t_len));
    Vector values(t_len + 1);
    for (auto& r : rewards) r = rng.uniform(-2.0, 2.0);
    for (int i = 0; i <= t_len; ++i) values(i) = rng.uniform(-2.0, 2.0);
    const double gamma = rng.uniform(0.05, 0.999);
    const double lambda = rng.uniform(0.0, 1.0);
    const Vector adv = compute_advantages(rewards, values, gamma, lambda);
    for (int t = 0; t < t_len; ++t) {
      double expect = 0.0;
      for (int l = 0; t + l < t_len; ++l) {
        const double delta = rewards[static_cast<std::size_t>(t + l)] +
                             gamma * values(t + l + 1) - values(t + l);
        expect += std::pow(gamma * lambda, l) * delta;
      }
      worst = std::max(worst, std::abs(adv(t) - expect));
    }
  }
  ensure(worst < 1e-10, "advantage error " + fmt(worst) + " >= 1e-10");
  return worst;
}

double oracle_sac() {
  Rng rng(43);
  const Eigen::Index n = 9;
  const double alpha = 0.37, gamma = 0.91;
  Matrix logits(n, kNumActions), q1(n, kNumActions), q2(n, kNumActions);
  Vector rewards(n);
  std::vector<bool> done;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    logits.data()[i] = rng.uniform(-2.0, 2.0);
    q1.data()[i] = rng.normal();
    q2.data()[i] = rng.normal();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    rewards(i) = rng.uniform(-1.0, 1.0);
    done.push_back(i % 3 == 0);
  }
  const Matrix logp = log_softmax_rows(logits);
  const Matrix p = logp.array().exp();

  double worst = 0.0;
  const Vector y = sac_value_target(rewards, done, p, logp, q1, q2, alpha, gamma);
  for (Eigen::Index i = 0; i < n; ++i) {
    double eq = 0.0, ent = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
      eq += p(i, a) * std::min(q1(i, a), q2(i, a));
      ent -= p(i, a) * logp(i, a);
    }
    const double expect =
        rewards(i) +
        (done[static_cast<std::size_t>(i)] ? 0.0 : gamma * (eq + alpha * ent));
    worst = std::max(worst, std::abs(y(i) - expect));
  }

  double loss_oracle = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double ent = 0.0, eq = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
      ent -= p(i, a) * logp(i, a);
      eq += p(i, a) * std::min(q1(i, a), q2(i, a));
    }
    loss_oracle += -alpha * ent - eq;
  }
  loss_oracle /= static_cast<double>(n);
  const Matrix min_q = q1.cwiseMin(q2);
  worst = std::max(worst,
                   std::abs(sac_policy_loss(p, logp, min_q, alpha) - loss_oracle));
  ensure(worst < 1e-10, "soft-value error " + fmt(worst) + " >= 1e-10");
  return worst;
}

double oracle_cg() {
  Rng rng(29);
  double worst = 0.0;
  for (int rep = 0; rep < 8; ++rep) {
    Matrix m(6, 6);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    const Matrix a = m * m.transpose() + 0.5 * Matrix::Identity(6, 6);
    Vector b(6);
    for (int i = 0; i < 6; ++i) b(i) = rng.uniform(-1.0, 1.0);
    const Vector x =
        conjugate_gradient([&](const Vector& v) { return a * v; }, b, 50);
    const Vector direct = a.ldlt().solve(b);
    worst = std::max(worst, (x - direct).norm() / direct.norm());
  }
  ensure(worst < 1e-8, "cg relative error " + fmt(worst) + " >= 1e-8");
  return worst;
}

void oracle_per() {
  const double alpha = 0.6, beta = 0.4;
  PrioritizedReplay replay(8, alpha);
  for (int i = 0; i < 4; ++i) replay.push({});
  replay.update_priorities({0, 1, 2, 3}, {1.0, 2.0, 3.0, 4.0});
  double mass[4], total = 0.0;
  for (int i = 0; i < 4; ++i) {
    mass[i] = std::pow(i + 1.0, alpha);
    total += mass[i];
  }
  Rng rng(97);
  const int n = 100000;
  auto s = replay.sample(n, beta, rng);
  int counts[4] = {0, 0, 0, 0};
  for (int k = 0; k < n; ++k) ++counts[s.indices[static_cast<std::size_t>(k)]];
  for (int i = 0; i < 4; ++i) {
    const double f = mass[i] / total;
    const double sigma = std::sqrt(f * (1.0 - f) / n);
    const double got = static_cast<double>(counts[i]) / n;
    ensure(std::abs(got - f) <= 3.0 * sigma,
           "priority " + std::to_string(i + 1) + " frequency " + fmt(got, 5) +
               " outside 3 sigma of " + fmt(f, 5));
  }
}

void oracle_kl_entropy() {
  Vector uniform = Vector::Constant(8, 0.125);
  ensure(std::abs(entropy(uniform) - std::log(8.0)) < 1e-12,
         "uniform entropy != ln 8");
  Vector onehot = Vector::Zero(8);
  onehot(3) = 1.0;
  ensure(entropy(onehot) == 0.0, "one-hot entropy != 0");
  Vector p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  const double expect = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  ensure(std::abs(kl_divergence(p, q) - expect) < 1e-15, "kl hand value off");
  ensure(kl_divergence(p, p) == 0.0, "kl(p, p) != 0");
}

std::string c3_oracles() {
  const double proj = oracle_projection();
  const double gae = oracle_gae();
  const double sac = oracle_sac();
  const double cg = oracle_cg();
  oracle_per();
  oracle_kl_entropy();
  return "projection " + fmt(proj) + ", advantages " + fmt(gae) + ", soft values " +
         fmt(sac) + ", cg " + fmt(cg) + ", per within 3 sigma, kl/entropy exact";
}

std::string c4_trust_region() {
  const EnvConfig env_cfg;
  Env env(env_cfg, 1);
  TrpoConfig cfg;
  TrpoAgent agent(cfg, 7);

  std::vector<std::vector<double>> rows;
  for (int ep = 0; ep < 50; ++ep) {
    Observation obs = env.reset(5000 + static_cast<std::uint64_t>(ep));
    while (!env.done()) {
      const int a = agent.act(obs, true);
      const Transition t = env.step(a);
      agent.observe_step(t);
      obs = t.next_obs;
    }
    agent.on_episode_end();
    for (auto& row : agent.take_diagnostics()) rows.push_back(std::move(row));
  }
  ensure(rows.size() == 50, "expected 50 update rows");

  int accepted = 0;
  double max_kl = 0.0, min_impr = 0.0;
  for (const auto& row : rows) {
    if (row[5] < 0.5) continue;  // rejected update: parameters were restored
    ++accepted;
    max_kl = std::max(max_kl, row[2]);
    min_impr = std::min(min_impr, row[1]);
    ensure(row[2] <= cfg.kl_delta + 1e-12,
           "accepted update with kl " + fmt(row[2]) + " > " + fmt(cfg.kl_delta));
    ensure(row[1] >= 0.0, "accepted update with negative improvement " +
                              fmt(row[1]));
  }
  ensure(accepted >= 1, "no update was accepted in 50 episodes");
  return std::to_string(accepted) + "/50 accepted, max kl " + fmt(max_kl) +
         " <= " + fmt(cfg.kl_delta) + ", min improvement " + fmt(min_impr);
}

std::string c5_strategy() {
  std::string detail;
  for (const std::string& kind : kKinds) {
    const auto& runs = bench(kind);
    const double rel = mean_over_seeds(runs, [](const SeedRun& r) {
      return r.metrics.reliability_pct;
    });
    const double head = mean_over_seeds(runs, [](const SeedRun& r) {
      return r.metrics.headlight_rate_pct;
    });
    const double tail = mean_over_seeds(runs, [](const SeedRun& r) {
      return r.metrics.taillight_rate_pct;
    });
    const double lean = mean_over_seeds(runs, [](const SeedRun& r) {
      return r.metrics.no_redundancy_pct;
    });
    double seconds = 0.0;
    for (const SeedRun& r : runs) seconds += r.seconds;

    const std::string tag = kind + " (head " + fmt(head, 4) + "%, tail " +
                            fmt(tail, 3) + "%, lean " + fmt(lean, 4) +
                            "%, rel " + fmt(rel, 4) + "%, " + fmt(seconds, 3) +
                            "s)";
    ensure(head >= 85.0, tag + ": headlight usage below 85%");
    ensure(tail <= 2.0, tag + ": taillight usage above 2%");
    ensure(lean >= 95.0, tag + ": single-link share below 95%");
    ensure(rel >= 90.0, tag + ": reliability below 90%");
    ensure(seconds <= 1800.0, tag + ": training exceeded 30 minutes");
    if (!detail.empty()) detail += "; ";
    detail += tag;
  }
  return detail;
}

std::string c6_stability() {
  std::map<std::string, double> sw;
  for (const std::string& kind : kKinds)
    sw[kind] = mean_over_seeds(bench(kind), [](const SeedRun& r) {
      return r.metrics.switch_count;
    });
  const double upper = std::max(sw["sac"], sw["rainbow"]);
  const std::string detail = "mean switches ppo " + fmt(sw["ppo"], 4) +
                             " <= trpo " + fmt(sw["trpo"], 4) +
                             " <= max(sac " + fmt(sw["sac"], 4) + ", rainbow " +
                             fmt(sw["rainbow"], 4) + ")";
  ensure(sw["ppo"] <= sw["trpo"] + 1e-9, detail + ": ppo > trpo");
  ensure(sw["trpo"] <= upper + 1e-9, detail + ": trpo > max(sac, rainbow)");
  return detail;
}

std::string c7_sample_complexity() {
  RunConfig cfg;
  std::map<std::string, long> ep90;
  for (const std::string& kind : kKinds) {
    const auto& runs = bench(kind);
    std::vector<double> mean_curve(runs.front().curve.size(), 0.0);
    for (const SeedRun& r : runs) {
      ensure(r.curve.size() == mean_curve.size(), kind + ": curve length mismatch");
      for (std::size_t i = 0; i < mean_curve.size(); ++i)
        mean_curve[i] += r.curve[i];
    }
    for (double& v : mean_curve) v /= static_cast<double>(runs.size());
    ep90[kind] =
        episodes_to_fraction(mean_curve, cfg.train.curve_window, 0.9);
    ensure(ep90[kind] >= 0, kind + ": never reached 90% of final return");
  }
  const std::string detail =
      "episodes to 90% of final return: sac " + std::to_string(ep90["sac"]) +
      ", rainbow " + std::to_string(ep90["rainbow"]) + ", ppo " +
      std::to_string(ep90["ppo"]) + ", trpo " + std::to_string(ep90["trpo"]);
  for (const std::string& fast : {std::string("sac"), std::string("rainbow")}) {
    ensure(ep90[fast] <= ep90["ppo"] && ep90[fast] <= ep90["trpo"],
           detail + ": " + fast + " slower than an on-policy agent");
    ensure(ep90[fast] < 100, detail + ": " + fast + " needed >= 100 episodes");
  }
  return detail;
}

std::string c8_robustness() {
  RunConfig base;
  int better = 0;
  std::string detail;
  for (const std::string& kind : kKinds) {
    const fs::path dir = fs::path(g_cache) / ("grid_" + kind);
    const fs::path rank1 = dir / "ckpt_rank1.bin";
    const fs::path rank2 = dir / "ckpt_rank2.bin";
    if (!fs::exists(rank1) || !fs::exists(rank2)) {
      std::cout << "  [grid] " << kind << " (" << grid_cells(base, kind).size()
                << " cells x " << base.grid.seeds.size() << " seeds x "
                << base.grid.episodes << " episodes)...\n"
                << std::flush;
      grid_search(base, kind, dir.string(), &std::cout);
    }
    ensure(fs::exists(rank1) && fs::exists(rank2),
           kind + ": grid search did not produce two ranked checkpoints");
    const auto rows = run_robustness(rank1.string(), rank2.string(),
                                     base.robustness.eval_episodes,
                                     (dir / "robustness.json").string());
    const double r1 = rows[0].scenario2.reliability_pct;
    const double r2 = rows[1].scenario2.reliability_pct;
    if (r2 >= r1) ++better;
    if (!detail.empty()) detail += "; ";
    detail += kind + " rank1 " + fmt(r1, 4) + "% vs rank2 " + fmt(r2, 4) + "%";
  }
  detail += " -> " + std::to_string(better) + "/4 second-best at least as reliable";
  ensure(better >= 3, detail);
  return detail;
}

void compare_dirs(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a))
    names_a.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b))
    names_b.push_back(e.path().filename().string());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  ensure(names_a == names_b && !names_a.empty(),
         a.string() + " and " + b.string() + " hold different file sets");
  for (const std::string& name : names_a)
    ensure(read_file_bytes(a / name) == read_file_bytes(b / name),
           name + " differs between " + a.string() + " and " + b.string());
}

std::string c9_determinism() {
  std::string detail;
  for (const auto& [kind, episodes, split] :
       {std::tuple<std::string, int, int>{"ppo", 12, 5},
        std::tuple<std::string, int, int>{"rainbow", 6, 3}}) {
    RunConfig cfg;
    cfg.train.episodes = episodes;
    const std::uint64_t seed = 11;

    // (a) Re-run from the echoed configuration: every output byte-identical.
    const fs::path dir1 = fs::path(g_cache) / ("det_" + kind + "_a");
    const fs::path dir2 = fs::path(g_cache) / ("det_" + kind + "_b");
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    TrainOptions opt1;
    opt1.out_dir = dir1.string();
    TrainResult first = train_run(cfg, kind, seed, opt1);
    ensure(!first.failed, kind + " determinism run diverged: " + first.error);

    const RunConfig echoed = load_config_from_string(dump_config(cfg));
    TrainOptions opt2;
    opt2.out_dir = dir2.string();
    TrainResult second = train_run(echoed, kind, seed, opt2);
    compare_dirs(dir1, dir2);
    ensure(first.final_payload == second.final_payload,
           kind + ": echoed-config rerun produced a different checkpoint");

    // (b) Interrupt-and-resume equals uninterrupted training.
    RunConfig short_cfg = cfg;
    short_cfg.train.episodes = split;
    TrainResult partial = train_run(short_cfg, kind, seed, {});
    ensure(!partial.failed, kind + " partial run diverged: " + partial.error);
    const TrainState mid = parse_train_state(partial.final_payload);
    TrainResult resumed = resume_run(mid, episodes, {});
    ensure(resumed.final_payload == first.final_payload,
           kind + ": resume from episode " + std::to_string(split) +
               " differs from uninterrupted training");

    if (!detail.empty()) detail += "; ";
    detail += kind + " rerun + resume(" + std::to_string(split) + "->" +
              std::to_string(episodes) + ") bit-identical";
  }
  return detail;
}

std::vector<Transition> load_fixture_trace(const fs::path& path) {
  std::ifstream in(path);
  ensure(bool(in), "cannot read fixture " + path.string());
  std::string line;
  ensure(bool(std::getline(in, line)), "empty fixture " + path.string());
  ensure(line == "action_id,reward,success,airtime_s",
         "unexpected fixture header in " + path.string());
  std::vector<Transition> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    Transition t;
    std::getline(row, field, ',');
    t.action_id = std::stoi(field);
    std::getline(row, field, ',');
    t.reward = std::stod(field);
    std::getline(row, field, ',');
    t.info.success = field == "1";
    std::getline(row, field, ',');
    t.info.airtime = std::stod(field);
    trace.push_back(t);
  }
  return trace;
}

std::string c10_fixtures() {
  const fs::path dir = VHOLAB_FIXTURE_DIR;
  Json expected = Json::parse(std::ifstream(dir / "metrics_expected.json"));
  ensure(!expected.empty(), "no fixtures found");
  for (const auto& [name, want] : expected.items()) {
    const Metrics m = compute_metrics(load_fixture_trace(dir / (name + ".csv")));
    const Json got = metrics_to_json(m);
    for (const auto& [field, value] : want.items()) {
      const double g = got.at(field).get<double>();
      const double w = value.get<double>();
      ensure(g == w, name + "." + field + ": computed " + fmt(g, 17) +
                         " != expected " + fmt(w, 17));
    }
  }
  return std::to_string(expected.size()) + " fixture traces matched exactly";
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cache" && i + 1 < argc) {
      g_cache = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--cache DIR] [--only N]\n";
      return 2;
    }
  }
  fs::create_directories(g_cache);
  std::cout << "acceptance cache: " << fs::absolute(g_cache).string() << "\n";

  const std::vector<std::pair<std::string, std::function<std::string()>>>
      criteria = {
          {"parameter-count oracles", c1_param_counts},
          {"gradient correctness", c2_gradients},
          {"algorithmic oracles", c3_oracles},
          {"trust-region constraint", c4_trust_region},
          {"learned-strategy structure", c5_strategy},
          {"stability ordering", c6_stability},
          {"sample-complexity ordering", c7_sample_complexity},
          {"robustness report", c8_robustness},
          {"determinism", c9_determinism},
          {"metrics fixtures", c10_fixtures},
      };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int num = static_cast<int>(i) + 1;
    if (only != 0 && only != num) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string verdict, detail;
    try {
      detail = criteria[i].second();
      verdict = "PASS";
    } catch (const std::exception& e) {
      detail = e.what();
      verdict = "FAIL";
      ++failures;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::cout << "[" << verdict << "] " << num << ". " << criteria[i].first
              << " — " << detail << " [" << fmt(secs, 3) << "s]\n"
              << std::flush;
  }

  if (failures == 0) {
    std::cout << "ACCEPTANCE: ALL CRITERIA PASS\n";
    return 0;
  }
  std::cout << "ACCEPTANCE: " << failures << " CRITERIA FAILED\n";
  return 1;
}
