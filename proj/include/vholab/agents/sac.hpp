#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "vholab/agents/agent.hpp"
#include "vholab/agents/replay.hpp"
#include "vholab/env.hpp"
#include "vholab/nn/adam.hpp"
#include "vholab/nn/dist.hpp"
#include "vholab/nn/net.hpp"

namespace vholab {

struct SacConfig {
  double tau = 0.005;
  double lr = 5e-4;
  int batch = 64;
  double alpha = 0.2;  // entropy temperature, fixed
  double gamma = 0.99;
  std::size_t replay_capacity = 100000;
  int warmup_steps = 1000;
  int update_every = 20;  // environment steps between gradient updates
  std::vector<int> hidden = {256, 256};
};

inline void validate(const SacConfig& c) {
  require_config(c.tau > 0.0 && c.tau <= 1.0, "sac: tau must lie in (0, 1]");
  require_config(c.lr > 0.0, "sac: lr must be positive");
  require_config(c.batch > 0, "sac: batch must be positive");
  require_config(c.alpha >= 0.0, "sac: alpha must be non-negative");
  require_config(c.gamma >= 0.0 && c.gamma <= 1.0, "sac: gamma must lie in [0, 1]");
  require_config(c.replay_capacity >= static_cast<std::size_t>(c.batch),
                 "sac: replay capacity must hold at least one batch");
  require_config(c.warmup_steps >= 0, "sac: warmup_steps must be non-negative");
  require_config(c.update_every > 0, "sac: update_every must be positive");
  for (int w : c.hidden) require_config(w > 0, "sac: hidden widths must be positive");
}

// ---------------------------------------------------------------------------
// Loss pieces (batch rows = samples, columns = actions), exposed for tests.
// ---------------------------------------------------------------------------

/// Soft state-value targets: y = r + gamma (1 - done) *
///   sum_a pi(a|s') (min(q1t, q2t)(s', a) - alpha log pi(a|s')).
inline Vector sac_value_target(const Vector& rewards,
                               const std::vector<bool>& done,
                               const Matrix& probs_next,
                               const Matrix& log_probs_next,
                               const Matrix& q1_target_next,
                               const Matrix& q2_target_next, double alpha,
                               double gamma) {
  const Eigen::Index n = rewards.size();
  require(static_cast<Eigen::Index>(done.size()) == n &&
              probs_next.rows() == n && log_probs_next.rows() == n &&
              q1_target_next.rows() == n && q2_target_next.rows() == n,
          "sac_value_target: batch size mismatch");
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = 0.0;
    for (Eigen::Index a = 0; a < probs_next.cols(); ++a) {
      const double min_q = std::min(q1_target_next(i, a), q2_target_next(i, a));
      v += probs_next(i, a) * (min_q - alpha * log_probs_next(i, a));
    }
    y(i) = rewards(i) + gamma * (done[static_cast<std::size_t>(i)] ? 0.0 : 1.0) * v;
  }
  return y;
}

/// Policy objective: mean_s sum_a pi(a|s) (alpha log pi(a|s) - min_q(s, a)).
inline double sac_policy_loss(const Matrix& probs, const Matrix& log_probs,
                              const Matrix& min_q, double alpha) {
  require(probs.rows() == min_q.rows() && probs.cols() == min_q.cols(),
          "sac_policy_loss: shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (Eigen::Index a = 0; a < probs.cols(); ++a)
      total += probs(i, a) * (alpha * log_probs(i, a) - min_q(i, a));
  return total / static_cast<double>(probs.rows());
}

/// Gradient of sac_policy_loss with respect to the policy logits:
/// pi_j (f_j - sum_a pi_a f_a) / B with f = alpha log pi - min_q.
inline Matrix sac_policy_loss_grad(const Matrix& probs, const Matrix& log_probs,
                                   const Matrix& min_q, double alpha) {
  const Eigen::Index n = probs.rows();
  const double inv_b = 1.0 / static_cast<double>(n);
  Matrix grad(n, probs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::ArrayXd f =
        alpha * log_probs.row(i).transpose().array() -
        min_q.row(i).transpose().array();
    const Eigen::ArrayXd pi = probs.row(i).transpose().array();
    const double mean_f = (pi * f).sum();
    grad.row(i) = (inv_b * pi * (f - mean_f)).matrix().transpose();
  }
  return grad;
}

/// target <- (1 - tau) * target + tau * online, blockwise.
inline void soft_update(DenseNet& target, const DenseNet& online, double tau) {
  require(target.layers().size() == online.layers().size(),
          "soft_update: layer count mismatch");
  for (std::size_t i = 0; i < target.layers().size(); ++i) {
    Affine& t = target.layers()[i];
    const Affine& o = online.layers()[i];
    require(t.w.rows() == o.w.rows() && t.w.cols() == o.w.cols() &&
                t.b.size() == o.b.size(),
            "soft_update: shape mismatch in layer " + std::to_string(i));
    t.w = (1.0 - tau) * t.w + tau * o.w;
    t.b = (1.0 - tau) * t.b + tau * o.b;
    if (t.noisy) {
      t.w_sigma = (1.0 - tau) * t.w_sigma + tau * o.w_sigma;
      t.b_sigma = (1.0 - tau) * t.b_sigma + tau * o.b_sigma;
    }
  }
}

// ---------------------------------------------------------------------------

class SacAgent : public Agent {
 public:
  SacAgent(const SacConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), replay_(cfg.replay_capacity) {
    validate(cfg_);
    Rng init = Rng::derive(seed, {0x7361635f696e6974ULL});
    actor_ = DenseNet(kObsDim, mlp_spec(cfg_.hidden, kNumActions), init);
    q1_ = DenseNet(kObsDim, mlp_spec(cfg_.hidden, kNumActions), init);
    q2_ = DenseNet(kObsDim, mlp_spec(cfg_.hidden, kNumActions), init);
    q1_target_ = q1_;
    q2_target_ = q2_;
    opt_actor_ = AdamState(actor_);
    opt_q1_ = AdamState(q1_);
    opt_q2_ = AdamState(q2_);
    rng_ = Rng::derive(seed, {0x7361635f616374ULL});
  }

  static std::vector<LayerSpec> mlp_spec(const std::vector<int>& hidden, int out) {
    std::vector<LayerSpec> specs;
    for (int w : hidden) specs.push_back({w, Activation::kRelu, false});
    specs.push_back({out, Activation::kIdentity, false});
    return specs;
  }

  std::string kind() const override { return "sac"; }

  int act(const Observation& obs, bool explore) override {
    const Vector pi = softmax(forward_one(actor_, obs_vector(obs)));
    return explore ? sample_categorical(pi, rng_) : argmax(pi);
  }

  void observe_step(const Transition& t) override {
    ReplayTransition rt;
    rt.obs = t.obs.as_array();
    rt.next_obs = t.next_obs.as_array();
    rt.action = t.action_id;
    rt.reward = t.reward;
    rt.done = t.done;
    replay_.push(rt);
    ++env_steps_;
    if (env_steps_ > cfg_.warmup_steps &&
        env_steps_ % cfg_.update_every == 0 &&
        replay_.size() >= static_cast<std::size_t>(cfg_.batch)) {
      update();
    }
  }

  void on_episode_end() override {}

  /// Gradient-trained parameters: actor plus both critics.
  std::size_t param_count() const override {
    return count_params(actor_) + count_params(q1_) + count_params(q2_);
  }

  /// Larger accounting that also includes the frozen target function once
  /// (the twin target copies share an architecture entry).
  std::size_t param_count_with_target() const {
    return param_count() + count_params(q1_target_);
  }

  std::vector<std::string> diagnostics_header() const override {
    return {"update", "critic_loss", "policy_loss", "entropy", "twin_gap",
            "mean_batch_reward"};
  }

  std::vector<std::vector<double>> take_diagnostics() override {
    return std::move(diag_);
  }

  void serialize(BinWriter& w) const override {
    write_net(w, actor_);
    write_net(w, q1_);
    write_net(w, q2_);
    write_net(w, q1_target_);
    write_net(w, q2_target_);
    write_adam(w, opt_actor_);
    write_adam(w, opt_q1_);
    write_adam(w, opt_q2_);
    w.rng(rng_);
    w.i64(env_steps_);
    w.i64(updates_);
    replay_.serialize(w);
  }

  void deserialize(BinReader& r) override {
    actor_ = read_net(r);
    q1_ = read_net(r);
    q2_ = read_net(r);
    q1_target_ = read_net(r);
    q2_target_ = read_net(r);
    opt_actor_ = read_adam(r);
    opt_q1_ = read_adam(r);
    opt_q2_ = read_adam(r);
    rng_ = r.rng();
    env_steps_ = r.i64();
    updates_ = r.i64();
    replay_ = ReplayBuffer::deserialize(r);
    diag_.clear();
  }

  const DenseNet& actor() const { return actor_; }
  const ReplayBuffer& replay() const { return replay_; }
  const SacConfig& config() const { return cfg_; }

 private:
  static Vector obs_vector(const Observation& o) {
    Vector v(kObsDim);
    v << o.x, o.y, o.cos_phi, o.sin_phi;
    return v;
  }

  void update() {
    const auto idx = replay_.sample_indices(cfg_.batch, rng_);
    const auto n = static_cast<Eigen::Index>(idx.size());
    Matrix s(n, kObsDim), s_next(n, kObsDim);
    Vector rewards(n);
    std::vector<bool> done(idx.size());
    std::vector<int> actions(idx.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const ReplayTransition& t = replay_.at(idx[static_cast<std::size_t>(i)]);
      for (int d = 0; d < kObsDim; ++d) {
        s(i, d) = t.obs[static_cast<std::size_t>(d)];
        s_next(i, d) = t.next_obs[static_cast<std::size_t>(d)];
      }
      rewards(i) = t.reward;
      done[static_cast<std::size_t>(i)] = t.done;
      actions[static_cast<std::size_t>(i)] = t.action;
    }

    // Critic targets from the frozen pair and the current policy at s'.
    const Matrix logp_next = log_softmax_rows(forward(actor_, s_next));
    const Matrix p_next = logp_next.array().exp();
    const Vector y = sac_value_target(rewards, done, p_next, logp_next,
                                      forward(q1_target_, s_next),
                                      forward(q2_target_, s_next), cfg_.alpha,
                                      cfg_.gamma);

    double critic_loss = 0.0;
    for (DenseNet* q : {&q1_, &q2_}) {
      Tape tape;
      const Matrix qv = forward(*q, s, nullptr, &tape);
      Matrix dq = Matrix::Zero(n, kNumActions);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = actions[static_cast<std::size_t>(i)];
        const double err = qv(i, a) - y(i);
        critic_loss += err * err;
        dq(i, a) = 2.0 * err / static_cast<double>(n);
      }
      adam_step(*q, backward(*q, tape, dq), q == &q1_ ? opt_q1_ : opt_q2_,
                {.lr = cfg_.lr});
    }
    critic_loss /= static_cast<double>(2 * n);

    // Policy step against the refreshed critics.
    Tape atape;
    const Matrix logits = forward(actor_, s, nullptr, &atape);
    const Matrix logp = log_softmax_rows(logits);
    const Matrix p = logp.array().exp();
    const Matrix q1v = forward(q1_, s);
    const Matrix q2v = forward(q2_, s);
    const Matrix min_q = q1v.cwiseMin(q2v);
    const double policy_loss = sac_policy_loss(p, logp, min_q, cfg_.alpha);
    const Matrix dlogits = sac_policy_loss_grad(p, logp, min_q, cfg_.alpha);
    adam_step(actor_, backward(actor_, atape, dlogits), opt_actor_,
              {.lr = cfg_.lr});

    soft_update(q1_target_, q1_, cfg_.tau);
    soft_update(q2_target_, q2_, cfg_.tau);

    double ent = 0.0, twin_gap = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      ent += entropy(p.row(i).transpose());
      const int a = actions[static_cast<std::size_t>(i)];
      twin_gap += std::abs(q1v(i, a) - q2v(i, a));
    }
    ++updates_;
    diag_.push_back({static_cast<double>(updates_), critic_loss, policy_loss,
                     ent / static_cast<double>(n),
                     twin_gap / static_cast<double>(n), rewards.mean()});
  }

  SacConfig cfg_;
  DenseNet actor_, q1_, q2_, q1_target_, q2_target_;
  AdamState opt_actor_, opt_q1_, opt_q2_;
  Rng rng_;
  ReplayBuffer replay_;
  std::vector<std::vector<double>> diag_;
  std::int64_t env_steps_ = 0;
  std::int64_t updates_ = 0;
};

}  // namespace vholab
