#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "vholab/env.hpp"
#include "vholab/errors.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Per-episode behavioural metrics computed from a transition trace.
// Rates are percentages of steps; switch_count counts action changes
// between consecutive steps.
// ---------------------------------------------------------------------------

struct Metrics {
  double reliability_pct = 0.0;     ///< steps whose packet was delivered
  double mean_reward = 0.0;         ///< average per-step reward
  double headlight_rate_pct = 0.0;  ///< actions that include the headlight link
  double taillight_rate_pct = 0.0;  ///< actions that include the taillight link
  double dsrc_rate_pct = 0.0;       ///< actions that include the DSRC link
  double vlc_rate_pct = 0.0;        ///< actions that include any light link
  double no_redundancy_pct = 0.0;   ///< actions using at most one link
  double idle_rate_pct = 0.0;       ///< the do-nothing action
  double mean_links = 0.0;          ///< average number of active links
  double mean_airtime_ms = 0.0;     ///< average per-step channel occupancy
  double switch_count = 0.0;        ///< action changes across the episode
};

inline Metrics compute_metrics(std::span<const Transition> trace) {
  require(!trace.empty(), "compute_metrics: empty trace");
  const double n = static_cast<double>(trace.size());
  Metrics m;
  double delivered = 0.0, reward = 0.0, head = 0.0, tail = 0.0, dsrc = 0.0;
  double vlc = 0.0, lean = 0.0, idle = 0.0, links = 0.0, airtime = 0.0;
  double switches = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Transition& t = trace[i];
    require(t.action_id >= 0 && t.action_id < kNumActions,
            "compute_metrics: action id out of range");
    const ActionDef& a = kActions[static_cast<std::size_t>(t.action_id)];
    delivered += t.info.success ? 1.0 : 0.0;
    reward += t.reward;
    head += a.headlight ? 1.0 : 0.0;
    tail += a.taillight ? 1.0 : 0.0;
    dsrc += a.dsrc ? 1.0 : 0.0;
    vlc += (a.headlight || a.taillight) ? 1.0 : 0.0;
    const int count = (a.dsrc ? 1 : 0) + (a.headlight ? 1 : 0) + (a.taillight ? 1 : 0);
    lean += count <= 1 ? 1.0 : 0.0;
    idle += count == 0 ? 1.0 : 0.0;
    links += count;
    airtime += t.info.airtime;
    if (i > 0 && trace[i].action_id != trace[i - 1].action_id) switches += 1.0;
  }
  m.reliability_pct = 100.0 * delivered / n;
  m.mean_reward = reward / n;
  m.headlight_rate_pct = 100.0 * head / n;
  m.taillight_rate_pct = 100.0 * tail / n;
  m.dsrc_rate_pct = 100.0 * dsrc / n;
  m.vlc_rate_pct = 100.0 * vlc / n;
  m.no_redundancy_pct = 100.0 * lean / n;
  m.idle_rate_pct = 100.0 * idle / n;
  m.mean_links = links / n;
  m.mean_airtime_ms = 1000.0 * airtime / n;
  m.switch_count = switches;
  return m;
}

/// Field-wise mean over per-episode metrics (switch_count averages too).
inline Metrics average_metrics(std::span<const Metrics> per_episode) {
  require(!per_episode.empty(), "average_metrics: empty input");
  Metrics m;
  const double n = static_cast<double>(per_episode.size());
  for (const Metrics& e : per_episode) {
    m.reliability_pct += e.reliability_pct;
    m.mean_reward += e.mean_reward;
    m.headlight_rate_pct += e.headlight_rate_pct;
    m.taillight_rate_pct += e.taillight_rate_pct;
    m.dsrc_rate_pct += e.dsrc_rate_pct;
    m.vlc_rate_pct += e.vlc_rate_pct;
    m.no_redundancy_pct += e.no_redundancy_pct;
    m.idle_rate_pct += e.idle_rate_pct;
    m.mean_links += e.mean_links;
    m.mean_airtime_ms += e.mean_airtime_ms;
    m.switch_count += e.switch_count;
  }
  m.reliability_pct /= n;
  m.mean_reward /= n;
  m.headlight_rate_pct /= n;
  m.taillight_rate_pct /= n;
  m.dsrc_rate_pct /= n;
  m.vlc_rate_pct /= n;
  m.no_redundancy_pct /= n;
  m.idle_rate_pct /= n;
  m.mean_links /= n;
  m.mean_airtime_ms /= n;
  m.switch_count /= n;
  return m;
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"reliability_pct", m.reliability_pct},
          {"mean_reward", m.mean_reward},
          {"headlight_rate_pct", m.headlight_rate_pct},
          {"taillight_rate_pct", m.taillight_rate_pct},
          {"dsrc_rate_pct", m.dsrc_rate_pct},
          {"vlc_rate_pct", m.vlc_rate_pct},
          {"no_redundancy_pct", m.no_redundancy_pct},
          {"idle_rate_pct", m.idle_rate_pct},
          {"mean_links", m.mean_links},
          {"mean_airtime_ms", m.mean_airtime_ms},
          {"switch_count", m.switch_count}};
}

}  // namespace vholab
