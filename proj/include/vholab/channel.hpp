#pragma once

#include <cmath>
#include <span>
#include <string>

#include "vholab/errors.hpp"
#include "vholab/math/geom.hpp"
#include "vholab/track.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Per-packet delivery probability for each link technology.
//
// DSRC degrades smoothly with distance and is orientation independent.
// The two VLC links (headlight forward, taillight rearward) require the
// receiver inside an asymmetric transmit beam and the transmitter inside the
// receiver's field of view, with intensity falling off radially.
// ---------------------------------------------------------------------------

struct DsrcConfig {
  double range_50 = 350.0;   // m at which delivery probability is 0.5
  double steepness = 0.03;   // logistic slope, 1/m
  double max_range = 1000.0; // hard cutoff, m
  double clamp_min = 0.0;    // test hook: pin success probability range
  double clamp_max = 1.0;
};

struct VlcConfig {
  double max_range = 60.0;        // m
  double rolloff = 2.0;           // radial falloff exponent
  double half_angle_left_deg = 25.0;   // full-gain beam edge, CCW side
  double half_angle_right_deg = 15.0;  // full-gain beam edge, CW side
  double taper_deg = 5.0;         // cosine taper width past each edge
  double rx_fov_deg = 60.0;       // receiver half field of view
  double clamp_min = 0.0;
  double clamp_max = 1.0;
};

struct ChannelConfig {
  DsrcConfig dsrc;
  VlcConfig headlight;
  VlcConfig taillight{.max_range = 40.0,
                      .half_angle_left_deg = 20.0,
                      .half_angle_right_deg = 20.0};
  double packet_bytes = 1024.0;
  double dsrc_bitrate_mbps = 6.0;
  double vlc_bitrate_mbps = 1.0;
};

inline void validate(const DsrcConfig& c) {
  require_config(c.range_50 > 0.0 && c.max_range > 0.0,
                 "dsrc: ranges must be positive");
  require_config(c.steepness > 0.0, "dsrc: steepness must be positive");
  require_config(0.0 <= c.clamp_min && c.clamp_min <= c.clamp_max &&
                     c.clamp_max <= 1.0,
                 "dsrc: clamp range must satisfy 0 <= min <= max <= 1");
}

inline void validate(const VlcConfig& c, const std::string& name) {
  require_config(c.max_range > 0.0, name + ": max_range must be positive");
  require_config(c.rolloff > 0.0, name + ": rolloff must be positive");
  require_config(c.half_angle_left_deg > 0.0 && c.half_angle_right_deg > 0.0,
                 name + ": half angles must be positive");
  require_config(c.taper_deg >= 0.0, name + ": taper must be non-negative");
  require_config(c.half_angle_left_deg + c.taper_deg < 180.0 &&
                     c.half_angle_right_deg + c.taper_deg < 180.0,
                 name + ": beam must not wrap past 180 degrees");
  require_config(c.rx_fov_deg > 0.0 && c.rx_fov_deg <= 180.0,
                 name + ": rx_fov must be in (0, 180]");
  require_config(0.0 <= c.clamp_min && c.clamp_min <= c.clamp_max &&
                     c.clamp_max <= 1.0,
                 name + ": clamp range must satisfy 0 <= min <= max <= 1");
}

inline void validate(const ChannelConfig& c) {
  validate(c.dsrc);
  validate(c.headlight, "headlight");
  validate(c.taillight, "taillight");
  require_config(c.packet_bytes > 0.0, "channel: packet_bytes must be positive");
  require_config(c.dsrc_bitrate_mbps > 0.0 && c.vlc_bitrate_mbps > 0.0,
                 "channel: bitrates must be positive");
}

/// Logistic delivery probability by distance, zero beyond max_range.
inline double dsrc_success(const RelGeometry& g, const DsrcConfig& cfg) {
  if (g.distance > cfg.max_range) return 0.0;
  const double p = 1.0 / (1.0 + std::exp(cfg.steepness * (g.distance - cfg.range_50)));
  return clip(p, cfg.clamp_min, cfg.clamp_max);
}

/// Angular gain: 1 inside [-right, +left], cosine taper to 0 over taper_w,
/// 0 beyond.  All angles in radians; off is relative to the beam axis.
inline double beam_gain(double off, double left, double right, double taper_w) {
  double excess;
  if (off >= 0.0) {
    if (off <= left) return 1.0;
    excess = off - left;
  } else {
    if (-off <= right) return 1.0;
    excess = -off - right;
  }
  if (taper_w <= 0.0 || excess >= taper_w) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * excess / taper_w));
}

/// Radial intensity factor: 1 at contact, (1 - (d/max)^rolloff) out to the
/// maximum range, 0 beyond.
inline double radial_gain(double distance, const VlcConfig& cfg) {
  if (distance >= cfg.max_range) return 0.0;
  return 1.0 - std::pow(distance / cfg.max_range, cfg.rolloff);
}

namespace detail {

inline double vlc_success(const RelGeometry& g, const VlcConfig& cfg,
                          double beam_axis, double rx_axis) {
  const double off = wrap_angle(g.bearing_tx - beam_axis);
  const double gain = beam_gain(off, deg2rad(cfg.half_angle_left_deg),
                                deg2rad(cfg.half_angle_right_deg),
                                deg2rad(cfg.taper_deg));
  const double rx_off = wrap_angle(g.bearing_rx - rx_axis);
  const double fov = std::abs(rx_off) <= deg2rad(cfg.rx_fov_deg) ? 1.0 : 0.0;
  const double p = radial_gain(g.distance, cfg) * gain * fov;
  return clip(p, cfg.clamp_min, cfg.clamp_max);
}

}  // namespace detail

/// Headlight: beam points along the transmitter heading; the receiver's
/// detector looks rearward (receiver must be ahead, facing away).
inline double headlight_success(const RelGeometry& g, const VlcConfig& cfg) {
  return detail::vlc_success(g, cfg, 0.0, kPi);
}

/// Taillight: beam points rearward; the receiver's detector looks forward.
inline double taillight_success(const RelGeometry& g, const VlcConfig& cfg) {
  return detail::vlc_success(g, cfg, kPi, 0.0);
}

/// Probability that at least one of several independent links delivers.
/// An empty set never delivers.
inline double combined_success(std::span<const double> link_probs) {
  double miss = 1.0;
  for (double p : link_probs) {
    require(p >= 0.0 && p <= 1.0,
            "combined_success: probability outside [0, 1]");
    miss *= 1.0 - p;
  }
  return link_probs.empty() ? 0.0 : 1.0 - miss;
}

/// Transmission airtime if the packet is sent on every link in the set.
inline double airtime_seconds(bool dsrc, bool headlight, bool taillight,
                              const ChannelConfig& cfg) {
  const double bits = cfg.packet_bytes * 8.0;
  double t = 0.0;
  if (dsrc) t += bits / (cfg.dsrc_bitrate_mbps * 1e6);
  if (headlight) t += bits / (cfg.vlc_bitrate_mbps * 1e6);
  if (taillight) t += bits / (cfg.vlc_bitrate_mbps * 1e6);
  return t;
}

}  // namespace vholab
