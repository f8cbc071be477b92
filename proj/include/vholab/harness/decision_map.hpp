#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vholab/agents/agent.hpp"
#include "vholab/env.hpp"
#include "vholab/io/config.hpp"
#include "vholab/io/csv.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Decision map: the greedy action as a function of the leader's position
// relative to the transmitter, probed on a polar grid under the same-heading
// convention (both vehicles aligned, leader at distance d and bearing beta).
// The companion overlap report bins an evaluation trace onto the same grid
// and flags cells where the policy used more than one action over time —
// the hysteresis band around the decision boundaries.
// ---------------------------------------------------------------------------

/// Relative geometry of two aligned vehicles with the leader at polar
/// coordinates (distance, bearing) in the transmitter frame.
inline RelGeometry aligned_geometry(double distance, double bearing) {
  return {distance, wrap_angle(bearing), wrap_angle(bearing + kPi)};
}

struct DecisionPoint {
  double distance = 0.0;
  double bearing = 0.0;
  Observation obs;
  int action = 0;
  std::array<double, 3> link_probs{};  // dsrc, headlight, taillight
};

inline std::vector<DecisionPoint> decision_map(Agent& agent,
                                               const DecisionMapParams& p,
                                               const EnvConfig& env) {
  std::vector<DecisionPoint> points;
  points.reserve(static_cast<std::size_t>(p.distance_bins) *
                 static_cast<std::size_t>(p.bearing_bins));
  const double dw = (p.distance_max - p.distance_min) / p.distance_bins;
  const double bw = 2.0 * kPi / p.bearing_bins;
  for (int i = 0; i < p.distance_bins; ++i) {
    const double d = p.distance_min + (i + 0.5) * dw;
    for (int j = 0; j < p.bearing_bins; ++j) {
      const double b = -kPi + (j + 0.5) * bw;
      DecisionPoint pt;
      pt.distance = d;
      pt.bearing = b;
      const RelGeometry g = aligned_geometry(d, b);
      pt.obs = observe(g, env.obs_range);
      pt.action = agent.act(pt.obs, /*explore=*/false);
      pt.link_probs = {dsrc_success(g, env.channels.dsrc),
                       headlight_success(g, env.channels.headlight),
                       taillight_success(g, env.channels.taillight)};
      points.push_back(pt);
    }
  }
  return points;
}

inline void write_decision_map_csv(const std::string& path,
                                   const std::vector<DecisionPoint>& points) {
  CsvWriter csv(path, {"distance_m", "bearing_rad", "x", "y", "cos_phi",
                       "sin_phi", "action_id", "p_dsrc", "p_headlight",
                       "p_taillight"});
  for (const DecisionPoint& pt : points) {
    csv.field(pt.distance);
    csv.field(pt.bearing);
    csv.field(pt.obs.x);
    csv.field(pt.obs.y);
    csv.field(pt.obs.cos_phi);
    csv.field(pt.obs.sin_phi);
    csv.field(pt.action);
    csv.field(pt.link_probs[0]);
    csv.field(pt.link_probs[1]);
    csv.field(pt.link_probs[2]);
    csv.end_row();
  }
}

struct OverlapCell {
  int distance_bin = 0;
  int bearing_bin = 0;
  double distance = 0.0;  // bin center
  double bearing = 0.0;
  int visits = 0;
  int distinct_actions = 0;
  unsigned action_mask = 0;  // bit a set when action a was taken in this cell
};

struct OverlapReport {
  std::vector<OverlapCell> cells;   // visited cells only, row-major order
  int visited = 0;
  int multi_action = 0;             // cells with >= 2 distinct actions
  double multi_action_pct = 0.0;    // hysteresis-band share of visited cells
};

/// Bins a trace onto the decision-map grid and reports per-cell action sets.
inline OverlapReport overlap_report(const std::vector<Transition>& trace,
                                    const DecisionMapParams& p) {
  require(!trace.empty(), "overlap_report: empty trace");
  const double dw = (p.distance_max - p.distance_min) / p.distance_bins;
  const double bw = 2.0 * kPi / p.bearing_bins;
  std::map<std::pair<int, int>, OverlapCell> bins;
  for (const Transition& t : trace) {
    const double d = t.info.distance;
    if (d < p.distance_min || d >= p.distance_max) continue;
    const int di = static_cast<int>((d - p.distance_min) / dw);
    int bi = static_cast<int>((wrap_angle(t.info.bearing_tx) + kPi) / bw);
    if (bi >= p.bearing_bins) bi = p.bearing_bins - 1;  // bearing == pi edge
    OverlapCell& cell = bins[{di, bi}];
    cell.distance_bin = di;
    cell.bearing_bin = bi;
    cell.distance = p.distance_min + (di + 0.5) * dw;
    cell.bearing = -kPi + (bi + 0.5) * bw;
    ++cell.visits;
    cell.action_mask |= 1u << static_cast<unsigned>(t.action_id);
  }
  OverlapReport rep;
  for (auto& [key, cell] : bins) {
    cell.distinct_actions = std::popcount(cell.action_mask);
    rep.visited += 1;
    if (cell.distinct_actions >= 2) rep.multi_action += 1;
    rep.cells.push_back(cell);
  }
  require(rep.visited > 0, "overlap_report: trace never entered the grid");
  rep.multi_action_pct = 100.0 * rep.multi_action / rep.visited;
  return rep;
}

/// Share of visited cells whose trace actions include the map's greedy action
/// at the cell center (how well the static map explains the trajectory).
inline double map_agreement_pct(const std::vector<DecisionPoint>& points,
                                const OverlapReport& rep,
                                const DecisionMapParams& p) {
  require(points.size() == static_cast<std::size_t>(p.distance_bins) *
                               static_cast<std::size_t>(p.bearing_bins),
          "map_agreement_pct: map size does not match the grid");
  require(!rep.cells.empty(), "map_agreement_pct: empty overlap report");
  int agree = 0;
  for (const OverlapCell& c : rep.cells) {
    const std::size_t idx =
        static_cast<std::size_t>(c.distance_bin) *
            static_cast<std::size_t>(p.bearing_bins) +
        static_cast<std::size_t>(c.bearing_bin);
    const int map_action = points[idx].action;
    if (c.action_mask & (1u << static_cast<unsigned>(map_action))) ++agree;
  }
  return 100.0 * agree / static_cast<double>(rep.cells.size());
}

inline void write_overlap_csv(const std::string& path,
                              const OverlapReport& rep) {
  CsvWriter csv(path, {"distance_bin", "bearing_bin", "distance_m",
                       "bearing_rad", "visits", "distinct_actions",
                       "action_mask"});
  for (const OverlapCell& c : rep.cells) {
    csv.field(c.distance_bin);
    csv.field(c.bearing_bin);
    csv.field(c.distance);
    csv.field(c.bearing);
    csv.field(c.visits);
    csv.field(c.distinct_actions);
    csv.field(static_cast<int>(c.action_mask));
    csv.end_row();
  }
}

}  // namespace vholab
