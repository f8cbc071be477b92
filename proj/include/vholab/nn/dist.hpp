#pragma once

#include <cmath>

#include "vholab/errors.hpp"
#include "vholab/math/rng.hpp"
#include "vholab/nn/net.hpp"

namespace vholab {

// Numerically stable categorical-distribution helpers.  All row-wise
// variants treat each matrix row as one distribution over columns.

inline Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = std::log((logits.array() - m).exp().sum()) + m;
  return logits.array() - lse;
}

inline Vector softmax(const Vector& logits) {
  return log_softmax(logits).array().exp();
}

inline Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
    out.row(r) = log_softmax(logits.row(r).transpose()).transpose();
  return out;
}

inline Matrix softmax_rows(const Matrix& logits) {
  return log_softmax_rows(logits).array().exp();
}

/// Shannon entropy of a probability vector; 0 log 0 counts as 0.
inline double entropy(const Vector& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs(i);
    require(p >= 0.0 && p <= 1.0 + 1e-12, "entropy: probability outside [0, 1]");
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

/// KL(p || q) for categoricals; terms with p_i = 0 contribute 0.
/// Requires q_i > 0 wherever p_i > 0.
inline double kl_divergence(const Vector& p, const Vector& q) {
  require(p.size() == q.size(), "kl_divergence: size mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    require(q(i) > 0.0, "kl_divergence: q has a zero where p has mass");
    kl += p(i) * (std::log(p(i)) - std::log(q(i)));
  }
  return kl;
}

/// Samples an index from a probability vector using one uniform draw.
inline int sample_categorical(const Vector& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

inline int argmax(const Vector& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace vholab
