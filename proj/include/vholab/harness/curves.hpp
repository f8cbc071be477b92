#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "vholab/errors.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Learning-curve aggregation across seeds: per-episode mean and the 95%
// confidence half-width from the Student-t quantile with n-1 degrees of
// freedom (sample standard deviation / sqrt(n)).
// ---------------------------------------------------------------------------

struct CurveBand {
  std::vector<double> mean;
  std::vector<double> half_width;
};

inline CurveBand aggregate_curves(const std::vector<std::vector<double>>& runs,
                                  double confidence = 0.95) {
  require(runs.size() >= 2, "aggregate_curves: need at least two runs");
  require(confidence > 0.0 && confidence < 1.0,
          "aggregate_curves: confidence must be in (0, 1)");
  const std::size_t len = runs.front().size();
  require(len > 0, "aggregate_curves: runs must be non-empty");
  for (const auto& run : runs)
    require(run.size() == len, "aggregate_curves: runs must have equal length");

  const double n = static_cast<double>(runs.size());
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);

  CurveBand band;
  band.mean.resize(len);
  band.half_width.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    double sum = 0.0;
    for (const auto& run : runs) sum += run[i];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& run : runs) {
      const double d = run[i] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));  // sample standard deviation
    band.mean[i] = mean;
    band.half_width[i] = t * sd / std::sqrt(n);
  }
  return band;
}

/// Mean of the trailing `window` entries (fewer if the curve is shorter).
inline double trailing_mean(const std::vector<double>& curve, int window) {
  require(!curve.empty(), "trailing_mean: empty curve");
  require(window > 0, "trailing_mean: window must be positive");
  const std::size_t w =
      std::min(curve.size(), static_cast<std::size_t>(window));
  double sum = 0.0;
  for (std::size_t i = curve.size() - w; i < curve.size(); ++i) sum += curve[i];
  return sum / static_cast<double>(w);
}

}  // namespace vholab
