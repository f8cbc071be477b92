#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vholab/errors.hpp"
#include "vholab/math/geom.hpp"
#include "vholab/math/rng.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Closed serpentine test track.
//
// Layout: hairpin_count + 1 parallel straights at y = 0, 2r, 4r, ... joined
// by alternating half-circle hairpins of radius r, then a closing section on
// the x < 0 side (two gentle quarter turns of radius R_c and a return
// straight) bringing the lap back to the origin.  hairpin_count must be odd
// so the last straight ends on the closing side.  All poses are evaluated
// analytically from the piecewise description; nothing is fitted.
// ---------------------------------------------------------------------------

struct TrackConfig {
  double straight_length = 300.0;  // m
  double hairpin_radius = 8.0;     // m; tight enough to break headlight LOS
  double closing_radius = 20.0;    // m; gentle enough to keep LOS to a leader
  int hairpin_count = 0;           // 0 = scenario default (3 or 9)
  double resolution = 0.5;         // m, centerline sampling step
};

struct Pose {
  Vec2 position;
  double heading = 0.0;  // radians, CCW from +x
};

/// One straight or circular-arc piece.  curvature > 0 turns left (CCW).
struct TrackSegment {
  Vec2 start;
  double heading = 0.0;
  double curvature = 0.0;
  double length = 0.0;

  Pose pose_at(double u) const {
    if (curvature == 0.0) {
      return {start + unit_from_angle(heading) * u, heading};
    }
    const double radius = 1.0 / curvature;  // signed
    // Center sits 90 degrees to the left of the heading for CCW turns
    // (to the right for CW, via the signed radius).
    const Vec2 center = start + rotate(unit_from_angle(heading), kPi / 2.0) * radius;
    const double turned = curvature * u;
    const Vec2 offset = rotate(start - center, turned);
    return {center + offset, wrap_angle(heading + turned)};
  }
};

class Track {
 public:
  Track(std::vector<TrackSegment> segments, int hairpins, const TrackConfig& cfg)
      : segments_(std::move(segments)), hairpins_(hairpins), cfg_(cfg) {
    seg_arc_.reserve(segments_.size() + 1);
    double acc = 0.0;
    seg_arc_.push_back(0.0);
    for (const auto& s : segments_) {
      acc += s.length;
      seg_arc_.push_back(acc);
    }
    length_ = acc;
  }

  double length() const { return length_; }
  int hairpin_count() const { return hairpins_; }
  const TrackConfig& config() const { return cfg_; }
  const std::vector<TrackSegment>& segments() const { return segments_; }

  double wrap_arc(double s) const {
    double w = std::fmod(s, length_);
    if (w < 0.0) w += length_;
    return w;
  }

  /// Exact pose at arc position s (wrapped onto the loop).
  Pose pose(double s) const {
    const double w = wrap_arc(s);
    auto it = std::upper_bound(seg_arc_.begin(), seg_arc_.end(), w);
    std::size_t i = static_cast<std::size_t>(it - seg_arc_.begin());
    i = (i == 0) ? 0 : i - 1;
    if (i >= segments_.size()) i = segments_.size() - 1;
    return segments_[i].pose_at(w - seg_arc_[i]);
  }

  /// Centerline polyline sampled at the configured resolution.
  /// Consecutive points are guaranteed distinct.
  std::vector<Vec2> sample_centerline() const {
    std::vector<Vec2> pts;
    const double step = cfg_.resolution;
    const auto n = static_cast<std::size_t>(std::floor(length_ / step));
    pts.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const double s = std::min(static_cast<double>(i) * step, length_);
      pts.push_back(pose(s).position);
    }
    return pts;
  }

 private:
  std::vector<TrackSegment> segments_;
  std::vector<double> seg_arc_;
  double length_ = 0.0;
  int hairpins_ = 0;
  TrackConfig cfg_;
};

inline int scenario_hairpins(int scenario) {
  require_config(scenario == 1 || scenario == 2,
                 "unknown scenario " + std::to_string(scenario) +
                     " (expected 1 or 2)");
  return scenario == 1 ? 3 : 9;
}

inline Track build_track(const TrackConfig& cfg, int scenario) {
  const int h = cfg.hairpin_count > 0 ? cfg.hairpin_count
                                      : scenario_hairpins(scenario);
  const double len = cfg.straight_length;
  const double r = cfg.hairpin_radius;
  const double rc = cfg.closing_radius;

  require_config(len > 0.0, "track: straight_length must be positive");
  require_config(r > 0.0, "track: hairpin_radius must be positive");
  require_config(rc > 0.0, "track: closing_radius must be positive");
  require_config(cfg.resolution > 0.0, "track: resolution must be positive");
  require_config(h % 2 == 1 && h >= 3,
                 "track: hairpin_count must be odd and >= 3");
  // Keeps the closing straight (x = -R_c) clear of the left-side hairpin
  // bulges (x >= -r) and of the closing turns' neighbours.
  require_config(rc > 2.0 * r,
                 "track: closing_radius must exceed twice hairpin_radius");
  // Return straight length 2 r h - 2 R_c must be non-negative.
  require_config(rc <= r * static_cast<double>(h),
                 "track: closing_radius too large for this hairpin count");

  std::vector<TrackSegment> segs;
  segs.reserve(static_cast<std::size_t>(2 * h + 4));

  Vec2 p{0.0, 0.0};
  double heading = 0.0;
  auto push = [&](double curvature, double length) {
    segs.push_back({p, heading, curvature, length});
    const Pose end = segs.back().pose_at(length);
    p = end.position;
    heading = end.heading;
  };

  for (int i = 0; i < h; ++i) {
    push(0.0, len);                                // straight i
    push((i % 2 == 0 ? 1.0 : -1.0) / r, kPi * r);  // hairpin i
  }
  push(0.0, len);  // top straight, ends at (0, 2 r h) heading -x

  // Closing section: two CCW quarter turns and a downward straight at
  // x = -R_c.  With h odd this lands exactly back on the origin pose.
  push(1.0 / rc, kPi * rc / 2.0);
  const double down = 2.0 * r * static_cast<double>(h) - 2.0 * rc;
  if (down > 0.0) push(0.0, down);
  push(1.0 / rc, kPi * rc / 2.0);

  return Track(std::move(segs), h, cfg);
}

// ---------------------------------------------------------------------------
// Two-vehicle mobility: a leader doing a bounded random walk in speed and a
// follower holding a target gap with a PD controller, both constrained to
// the track centerline.  Gap caps are enforced on positions (hard clamps),
// independent of the speed dynamics.
// ---------------------------------------------------------------------------

struct MobilityConfig {
  double speed_min_kmh = 30.0;
  double speed_max_kmh = 40.0;
  double leader_accel_noise = 0.8;    // m/s^2 (std dev)
  double follower_accel_noise = 0.4;  // m/s^2 (std dev)
  double max_accel = 1.5;             // follower control authority, m/s^2
  double gap_kp = 0.3;                // 1/s^2
  double gap_kd = 0.8;                // 1/s
  double target_gap = 10.0;           // m
  double min_gap = 5.0;               // m
  double max_gap = 60.0;              // m
  double start_gap = 10.0;            // m
};

inline double kmh_to_mps(double kmh) { return kmh / 3.6; }

struct VehicleState {
  double arc = 0.0;    // m along the loop
  double speed = 0.0;  // m/s
  Vec2 position;
  double heading = 0.0;
};

inline void place_vehicle(const Track& track, VehicleState& v, double arc,
                          double speed) {
  v.arc = track.wrap_arc(arc);
  v.speed = speed;
  const Pose pose = track.pose(v.arc);
  v.position = pose.position;
  v.heading = pose.heading;
}

inline void validate(const MobilityConfig& m) {
  require_config(m.speed_min_kmh > 0.0 && m.speed_max_kmh >= m.speed_min_kmh,
                 "mobility: need 0 < speed_min_kmh <= speed_max_kmh");
  require_config(m.leader_accel_noise >= 0.0 && m.follower_accel_noise >= 0.0,
                 "mobility: accel noise must be non-negative");
  require_config(m.max_accel >= 0.0, "mobility: max_accel must be non-negative");
  require_config(m.min_gap >= 0.0 && m.max_gap > m.min_gap,
                 "mobility: need 0 <= min_gap < max_gap");
  require_config(m.target_gap >= m.min_gap && m.target_gap <= m.max_gap,
                 "mobility: target_gap outside [min_gap, max_gap]");
  require_config(m.start_gap >= m.min_gap && m.start_gap <= m.max_gap,
                 "mobility: start_gap outside [min_gap, max_gap]");
}

/// Arc-length separation from follower to leader, in [0, track length).
inline double arc_gap(const Track& track, const VehicleState& leader,
                      const VehicleState& follower) {
  return track.wrap_arc(leader.arc - follower.arc);
}

/// Advances both vehicles by dt.  Draws exactly two normal variates
/// (leader first, then follower) so the stream layout is fixed.
inline void step_vehicles(const Track& track, VehicleState& leader,
                          VehicleState& follower, double dt,
                          const MobilityConfig& cfg, Rng& rng) {
  require(dt > 0.0, "step_vehicles: dt must be positive");
  const double vmin = kmh_to_mps(cfg.speed_min_kmh);
  const double vmax = kmh_to_mps(cfg.speed_max_kmh);

  const double lead_noise = rng.normal();
  const double foll_noise = rng.normal();

  leader.speed =
      clip(leader.speed + cfg.leader_accel_noise * lead_noise * dt, vmin, vmax);

  const double gap = arc_gap(track, leader, follower);
  const double ctrl = clip(cfg.gap_kp * (gap - cfg.target_gap) +
                               cfg.gap_kd * (leader.speed - follower.speed),
                           -cfg.max_accel, cfg.max_accel);
  follower.speed = clip(
      follower.speed + (ctrl + cfg.follower_accel_noise * foll_noise) * dt,
      vmin, vmax);

  double lead_adv = leader.speed * dt;
  double foll_adv = follower.speed * dt;

  // Hard gap caps act on the advances, never moving either vehicle backward.
  const double new_gap = gap + lead_adv - foll_adv;
  if (new_gap < cfg.min_gap) {
    foll_adv = std::max(0.0, gap + lead_adv - cfg.min_gap);
  } else if (new_gap > cfg.max_gap) {
    lead_adv = std::max(0.0, cfg.max_gap - gap + foll_adv);
  }

  place_vehicle(track, leader, leader.arc + lead_adv, leader.speed);
  place_vehicle(track, follower, follower.arc + foll_adv, follower.speed);
}

// ---------------------------------------------------------------------------
// Relative geometry between a transmitter and a receiver pose.
// ---------------------------------------------------------------------------

struct RelGeometry {
  double distance = 0.0;    // m, Euclidean
  double bearing_tx = 0.0;  // direction of rx seen from tx, relative to tx heading
  double bearing_rx = 0.0;  // direction of tx seen from rx, relative to rx heading
};

inline RelGeometry relative_geometry(const VehicleState& tx,
                                     const VehicleState& rx) {
  const Vec2 d = rx.position - tx.position;
  const double dist = d.norm();
  if (dist == 0.0) return {0.0, 0.0, 0.0};
  const double los = std::atan2(d.y, d.x);
  return {dist, wrap_angle(los - tx.heading),
          wrap_angle(los + kPi - rx.heading)};
}

}  // namespace vholab
