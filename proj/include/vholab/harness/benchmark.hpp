#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vholab/harness/curves.hpp"
#include "vholab/harness/train.hpp"
#include "vholab/io/csv.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Multi-seed benchmark for one agent: trains every configured seed, writes
// per-seed artifacts under seed_<n>/, and aggregates the learning curves into
// a 95% confidence band plus a cross-seed summary.
// ---------------------------------------------------------------------------

struct BenchmarkResult {
  std::string kind;
  std::vector<std::uint64_t> seeds;
  std::vector<TrainResult> runs;     // one per seed, aligned with `seeds`
  CurveBand band;                    // empty when fewer than 2 runs completed
  Metrics metrics;                   // eval metrics averaged over completed seeds
  double mean_final = std::numeric_limits<double>::quiet_NaN();
  double mean_switches = std::numeric_limits<double>::quiet_NaN();
  int completed = 0;
  double total_seconds = 0.0;
};

inline void write_curve_band_csv(const std::string& path,
                                 const CurveBand& band) {
  CsvWriter csv(path, {"episode", "mean_return", "ci_half_width", "ci_low",
                       "ci_high"});
  for (std::size_t i = 0; i < band.mean.size(); ++i) {
    csv.field(static_cast<int>(i));
    csv.field(band.mean[i]);
    csv.field(band.half_width[i]);
    csv.field(band.mean[i] - band.half_width[i]);
    csv.field(band.mean[i] + band.half_width[i]);
    csv.end_row();
  }
}

inline BenchmarkResult benchmark_agent(const RunConfig& cfg,
                                       const std::string& kind,
                                       const std::string& out_dir,
                                       std::ostream* progress = nullptr) {
  validate(cfg);
  BenchmarkResult bench;
  bench.kind = kind;
  bench.seeds = cfg.seeds;

  for (std::uint64_t seed : cfg.seeds) {
    TrainOptions opt;
    if (!out_dir.empty())
      opt.out_dir = out_dir + "/seed_" + std::to_string(seed);
    opt.progress = progress;
    TrainResult run = train_run(cfg, kind, seed, opt);
    bench.total_seconds += run.train_seconds;
    if (progress != nullptr) {
      *progress << "[" << kind << " seed=" << seed << "] ";
      if (run.failed)
        *progress << "diverged: " << run.error;
      else
        *progress << "final_window_mean=" << run.final_window_mean
                  << " reliability=" << run.eval_metrics.reliability_pct << "%";
      *progress << " (" << run.train_seconds << "s)\n";
    }
    bench.runs.push_back(std::move(run));
  }

  std::vector<std::vector<double>> curves;
  std::vector<Metrics> metrics;
  double final_sum = 0.0, switch_sum = 0.0;
  for (const TrainResult& run : bench.runs) {
    if (run.failed) continue;
    curves.push_back(run.curve);
    metrics.push_back(run.eval_metrics);
    final_sum += run.final_window_mean;
    switch_sum += run.eval_metrics.switch_count;
    ++bench.completed;
  }
  if (bench.completed > 0) {
    bench.mean_final = final_sum / bench.completed;
    bench.mean_switches = switch_sum / bench.completed;
    bench.metrics = average_metrics(metrics);
  }
  if (curves.size() >= 2) bench.band = aggregate_curves(curves);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (!bench.band.mean.empty())
      write_curve_band_csv(out_dir + "/curve_band.csv", bench.band);

    nlohmann::json j;
    j["agent"] = kind;
    j["scenario"] = cfg.env.scenario;
    j["episodes"] = cfg.train.episodes;
    j["seeds"] = cfg.seeds;
    j["completed_seeds"] = bench.completed;
    j["total_train_seconds"] = bench.total_seconds;
    if (bench.completed > 0) {
      j["mean_final_window_return"] = bench.mean_final;
      j["metrics"] = metrics_to_json(bench.metrics);
    }
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t i = 0; i < bench.runs.size(); ++i) {
      const TrainResult& run = bench.runs[i];
      nlohmann::json row;
      row["seed"] = cfg.seeds[i];
      row["failed"] = run.failed;
      if (run.failed)
        row["error"] = run.error;
      else {
        row["final_window_mean"] = run.final_window_mean;
        row["metrics"] = metrics_to_json(run.eval_metrics);
      }
      per.push_back(row);
    }
    j["per_seed"] = per;
    std::ofstream out(out_dir + "/summary.json");
    if (!out) throw DataError("cannot write " + out_dir + "/summary.json");
    out << j.dump(2) << "\n";
  }

  return bench;
}

/// First episode whose trailing-window mean reaches the given fraction of the
/// final trailing-window mean (measuring learning speed); -1 when never.
/// Negative or zero targets compare on the raw value.
inline long episodes_to_fraction(const std::vector<double>& curve, int window,
                                 double fraction) {
  require(!curve.empty(), "episodes_to_fraction: empty curve");
  const double final_mean = trailing_mean(curve, window);
  const double target = final_mean >= 0.0 ? fraction * final_mean
                                          : final_mean / fraction;
  std::vector<double> prefix;
  prefix.reserve(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    prefix.push_back(curve[i]);
    if (trailing_mean(prefix, window) >= target) return static_cast<long>(i);
  }
  return -1;
}

}  // namespace vholab
