#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "vholab/harness/train.hpp"
#include "vholab/io/csv.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Hyperparameter grid search.  Each agent has a fixed grid of candidate
// settings; every cell is trained on every grid seed and cells are ranked by
// the mean final-window return across seeds.  The best seed's end-state
// checkpoint is kept for the two top-ranked cells so they can be re-evaluated
// later (e.g. on the longer track).
// ---------------------------------------------------------------------------

struct GridCell {
  std::string label;
  RunConfig cfg;
};

inline std::vector<GridCell> grid_cells(const RunConfig& base,
                                        const std::string& kind) {
  std::vector<GridCell> cells;
  auto name = [](const std::string& key, double v) {
    return key + "=" + format_double(v);
  };
  if (kind == "ppo") {
    for (double lr_a : {1e-5, 1e-2})
      for (double lr_c : {1e-3, 1e-2})
        for (double clip : {0.2, 0.3}) {
          GridCell c{name("lr_actor", lr_a) + ";" + name("lr_critic", lr_c) +
                         ";" + name("clip", clip),
                     base};
          c.cfg.ppo.lr_actor = lr_a;
          c.cfg.ppo.lr_critic = lr_c;
          c.cfg.ppo.clip = clip;
          cells.push_back(std::move(c));
        }
  } else if (kind == "trpo") {
    for (double delta : {0.005, 0.01})
      for (int width : {32, 64})
        for (int ls : {10, 20}) {
          GridCell c{name("kl_delta", delta) + ";width=" +
                         std::to_string(width) + ";ls_iter=" +
                         std::to_string(ls),
                     base};
          c.cfg.trpo.kl_delta = delta;
          c.cfg.trpo.hidden_width = width;
          c.cfg.trpo.line_search_max_iter = ls;
          cells.push_back(std::move(c));
        }
  } else if (kind == "sac") {
    for (double tau : {0.005, 0.01})
      for (double lr : {3e-4, 5e-4})
        for (int batch : {64, 128, 256}) {
          GridCell c{name("tau", tau) + ";" + name("lr", lr) + ";batch=" +
                         std::to_string(batch),
                     base};
          c.cfg.sac.tau = tau;
          c.cfg.sac.lr = lr;
          c.cfg.sac.batch = batch;
          cells.push_back(std::move(c));
        }
  } else if (kind == "rainbow") {
    for (double alpha : {0.1, 0.3})
      for (double beta : {0.5, 0.7})
        for (int atoms : {25, 100})
          for (double eps : {1e-5, 1e-4}) {
            GridCell c{name("per_alpha", alpha) + ";" + name("per_beta0", beta) +
                           ";atoms=" + std::to_string(atoms) + ";" +
                           name("per_eps", eps),
                       base};
            c.cfg.rainbow.per_alpha = alpha;
            c.cfg.rainbow.per_beta0 = beta;
            c.cfg.rainbow.atoms = atoms;
            c.cfg.rainbow.per_eps = eps;
            cells.push_back(std::move(c));
          }
  } else {
    throw ConfigError("unknown agent kind: " + kind);
  }
  return cells;
}

struct GridCellResult {
  std::string label;
  std::vector<double> seed_finals;  // NaN where the seed diverged
  double mean_final = std::numeric_limits<double>::quiet_NaN();
  int completed = 0;
  std::uint64_t best_seed = 0;
  std::vector<std::uint8_t> best_payload;  // kept only for top-ranked cells
};

struct GridReport {
  std::string kind;
  std::vector<GridCellResult> cells;    // enumeration order
  std::vector<std::size_t> ranking;     // indices into cells, best first
};

namespace detail {

/// Ranking: completed cells by mean final-window return (desc); cells with
/// some diverged seeds rank below fully-complete ones, fully-diverged last.
inline std::vector<std::size_t> rank_cells(
    const std::vector<GridCellResult>& cells, std::size_t n_seeds) {
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = cells[a];
    const auto& cb = cells[b];
    const bool fa = ca.completed == static_cast<int>(n_seeds);
    const bool fb = cb.completed == static_cast<int>(n_seeds);
    if (fa != fb) return fa;
    const bool ea = ca.completed == 0;
    const bool eb = cb.completed == 0;
    if (ea != eb) return eb;
    if (ea && eb) return false;
    return ca.mean_final > cb.mean_final;
  });
  return order;
}

inline void drop_unranked_payloads(std::vector<GridCellResult>& cells,
                                   std::size_t n_seeds) {
  const auto order = rank_cells(cells, n_seeds);
  for (std::size_t i = 2; i < order.size(); ++i) {
    auto& p = cells[order[i]].best_payload;
    p.clear();
    p.shrink_to_fit();
  }
}

}  // namespace detail

inline GridReport grid_search(const RunConfig& base, const std::string& kind,
                              const std::string& out_dir,
                              std::ostream* progress = nullptr) {
  validate(base);
  const std::vector<GridCell> cells = grid_cells(base, kind);
  const std::vector<std::uint64_t>& seeds = base.grid.seeds;

  GridReport report;
  report.kind = kind;

  for (const GridCell& cell : cells) {
    RunConfig cfg = cell.cfg;
    cfg.train.episodes = base.grid.episodes;

    GridCellResult res;
    res.label = cell.label;
    double best_final = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    for (std::uint64_t seed : seeds) {
      TrainResult run = train_run(cfg, kind, seed, {});
      if (run.failed) {
        res.seed_finals.push_back(std::numeric_limits<double>::quiet_NaN());
        if (progress != nullptr)
          *progress << "[grid " << kind << "] " << cell.label << " seed="
                    << seed << " diverged: " << run.error << "\n";
        continue;
      }
      res.seed_finals.push_back(run.final_window_mean);
      sum += run.final_window_mean;
      ++res.completed;
      if (run.final_window_mean > best_final) {
        best_final = run.final_window_mean;
        res.best_seed = seed;
        res.best_payload = std::move(run.final_payload);
      }
    }
    if (res.completed > 0) res.mean_final = sum / res.completed;

    if (progress != nullptr) {
      *progress << "[grid " << kind << "] " << cell.label << " mean_final=";
      if (res.completed > 0)
        *progress << res.mean_final;
      else
        *progress << "n/a";
      *progress << " (" << res.completed << "/" << seeds.size() << " seeds)\n";
    }

    report.cells.push_back(std::move(res));
    // Keep at most the two leading payloads in memory while the grid runs.
    detail::drop_unranked_payloads(report.cells, seeds.size());
  }

  report.ranking = detail::rank_cells(report.cells, seeds.size());

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> header = {"rank", "params", "mean_final_return",
                                       "completed_seeds"};
    for (std::uint64_t s : seeds)
      header.push_back("seed_" + std::to_string(s) + "_final");
    CsvWriter csv(out_dir + "/grid_ranking.csv", header);
    for (std::size_t r = 0; r < report.ranking.size(); ++r) {
      const GridCellResult& c = report.cells[report.ranking[r]];
      csv.field(static_cast<int>(r + 1));
      csv.field(c.label);
      csv.field(c.mean_final);
      csv.field(c.completed);
      for (double f : c.seed_finals) csv.field(f);
      csv.end_row();
    }
    csv.flush();

    nlohmann::json j;
    j["agent"] = kind;
    j["episodes"] = base.grid.episodes;
    j["seeds"] = seeds;
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t r = 0; r < report.ranking.size(); ++r) {
      const GridCellResult& c = report.cells[report.ranking[r]];
      nlohmann::json row;
      row["rank"] = r + 1;
      row["params"] = c.label;
      row["completed_seeds"] = c.completed;
      if (c.completed > 0) row["mean_final_return"] = c.mean_final;
      nlohmann::json finals = nlohmann::json::array();
      for (double f : c.seed_finals) {
        if (std::isnan(f))
          finals.push_back(nullptr);
        else
          finals.push_back(f);
      }
      row["seed_finals"] = finals;
      arr.push_back(row);
    }
    j["ranking"] = arr;
    std::ofstream out(out_dir + "/grid_summary.json");
    if (!out) throw DataError("cannot write " + out_dir + "/grid_summary.json");
    out << j.dump(2) << "\n";

    for (std::size_t r = 0; r < std::min<std::size_t>(2, report.ranking.size());
         ++r) {
      const GridCellResult& c = report.cells[report.ranking[r]];
      if (c.best_payload.empty()) continue;  // every seed diverged
      write_checkpoint(
          out_dir + "/ckpt_rank" + std::to_string(r + 1) + ".bin",
          c.best_payload);
    }
  }

  return report;
}

}  // namespace vholab
