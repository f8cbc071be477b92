#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vholab/nn/net.hpp"

namespace vholab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam moments, one pair per parameter block of a DenseNet
/// (noise scales included for noisy layers).
class AdamState {
 public:
  AdamState() = default;

  explicit AdamState(const DenseNet& net) {
    const auto n = net.layers().size();
    m_w.resize(n); v_w.resize(n); m_b.resize(n); v_b.resize(n);
    m_ws.resize(n); v_ws.resize(n); m_bs.resize(n); v_bs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Affine& l = net.layers()[i];
      m_w[i] = Matrix::Zero(l.w.rows(), l.w.cols());
      v_w[i] = Matrix::Zero(l.w.rows(), l.w.cols());
      m_b[i] = Vector::Zero(l.b.size());
      v_b[i] = Vector::Zero(l.b.size());
      if (l.noisy) {
        m_ws[i] = Matrix::Zero(l.w_sigma.rows(), l.w_sigma.cols());
        v_ws[i] = Matrix::Zero(l.w_sigma.rows(), l.w_sigma.cols());
        m_bs[i] = Vector::Zero(l.b_sigma.size());
        v_bs[i] = Vector::Zero(l.b_sigma.size());
      }
    }
  }

  std::vector<Matrix> m_w, v_w, m_ws, v_ws;
  std::vector<Vector> m_b, v_b, m_bs, v_bs;
  long step = 0;
};

namespace detail {

template <typename T>
void adam_update_block(T& param, const T& grad, T& m, T& v, double lr,
                       const AdamConfig& cfg, double bc1, double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
  param.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

template <typename T>
bool all_finite(const T& x) {
  return x.allFinite();
}

}  // namespace detail

/// One Adam step over every parameter block.  Non-finite gradients abort
/// with the offending layer identified, before any parameter is touched.
inline void adam_step(DenseNet& net, const Gradients& g, AdamState& state,
                      const AdamConfig& cfg) {
  const auto n = net.layers().size();
  require(g.dw.size() == n && state.m_w.size() == n,
          "adam_step: gradient/state shape mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok =
        detail::all_finite(g.dw[i]) && detail::all_finite(g.db[i]) &&
        (!net.layers()[i].noisy ||
         (detail::all_finite(g.dw_sigma[i]) && detail::all_finite(g.db_sigma[i])));
    if (!ok) {
      throw NumericError("adam_step: non-finite gradient in layer " +
                         std::to_string(i));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    Affine& l = net.layers()[i];
    detail::adam_update_block(l.w, g.dw[i], state.m_w[i], state.v_w[i], cfg.lr,
                              cfg, bc1, bc2);
    detail::adam_update_block(l.b, g.db[i], state.m_b[i], state.v_b[i], cfg.lr,
                              cfg, bc1, bc2);
    if (l.noisy) {
      detail::adam_update_block(l.w_sigma, g.dw_sigma[i], state.m_ws[i],
                                state.v_ws[i], cfg.lr, cfg, bc1, bc2);
      detail::adam_update_block(l.b_sigma, g.db_sigma[i], state.m_bs[i],
                                state.v_bs[i], cfg.lr, cfg, bc1, bc2);
    }
  }
}

}  // namespace vholab
