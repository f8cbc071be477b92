#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vholab/agents/agent.hpp"
#include "vholab/agents/rollout.hpp"
#include "vholab/env.hpp"
#include "vholab/nn/adam.hpp"
#include "vholab/nn/dist.hpp"
#include "vholab/nn/net.hpp"

namespace vholab {

struct PpoConfig {
  double lr_actor = 1e-5;
  double lr_critic = 1e-3;
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double entropy_coef = 0.01;
  int epochs = 10;
  int minibatch = 256;
  std::vector<int> actor_hidden = {64, 64};
  std::vector<int> critic_hidden = {64, 64};
  bool normalize_advantages = true;
};

inline void validate(const PpoConfig& c) {
  require_config(c.lr_actor > 0.0 && c.lr_critic > 0.0, "ppo: learning rates must be positive");
  require_config(c.clip > 0.0 && c.clip < 1.0, "ppo: clip must lie in (0, 1)");
  require_config(c.gamma >= 0.0 && c.gamma <= 1.0, "ppo: gamma must lie in [0, 1]");
  require_config(c.lambda >= 0.0 && c.lambda <= 1.0, "ppo: lambda must lie in [0, 1]");
  require_config(c.entropy_coef >= 0.0, "ppo: entropy_coef must be non-negative");
  require_config(c.epochs > 0 && c.minibatch > 0, "ppo: epochs and minibatch must be positive");
  for (int w : c.actor_hidden)
    require_config(w > 0, "ppo: actor_hidden widths must be positive");
  for (int w : c.critic_hidden)
    require_config(w > 0, "ppo: critic_hidden widths must be positive");
}

// ---------------------------------------------------------------------------
// Loss pieces, exposed for direct testing.
// ---------------------------------------------------------------------------

/// Clipped-surrogate actor objective (to be maximized), averaged over the
/// batch: mean( min(ratio * A, clip(ratio, 1-eps, 1+eps) * A) ).
inline double ppo_surrogate(const Vector& log_probs_new,
                            const Vector& log_probs_old,
                            const Vector& advantages, double clip_eps) {
  require(log_probs_new.size() == log_probs_old.size() &&
              log_probs_new.size() == advantages.size(),
          "ppo_surrogate: size mismatch");
  require(log_probs_new.size() > 0, "ppo_surrogate: empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < advantages.size(); ++i) {
    const double ratio = std::exp(log_probs_new(i) - log_probs_old(i));
    const double clipped = clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    total += std::min(ratio * advantages(i), clipped * advantages(i));
  }
  return total / static_cast<double>(advantages.size());
}

/// Full actor loss = -surrogate - entropy_coef * mean entropy.
inline double ppo_actor_loss(const Matrix& logits, const std::vector<int>& actions,
                             const Vector& log_probs_old, const Vector& advantages,
                             double clip_eps, double entropy_coef) {
  const Matrix logp = log_softmax_rows(logits);
  Vector lp_new(logits.rows());
  double ent = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    lp_new(i) = logp(i, actions[static_cast<std::size_t>(i)]);
    ent += entropy(logp.row(i).transpose().array().exp());
  }
  ent /= static_cast<double>(logits.rows());
  return -ppo_surrogate(lp_new, log_probs_old, advantages, clip_eps) -
         entropy_coef * ent;
}

/// Gradient of ppo_actor_loss with respect to the logits.  The clipped
/// branch passes no gradient; ties go to the unclipped branch.
inline Matrix ppo_actor_loss_grad(const Matrix& logits,
                                  const std::vector<int>& actions,
                                  const Vector& log_probs_old,
                                  const Vector& advantages, double clip_eps,
                                  double entropy_coef) {
  const Eigen::Index n = logits.rows();
  const double scale = 1.0 / static_cast<double>(n);
  const Matrix logp = log_softmax_rows(logits);
  Matrix grad = Matrix::Zero(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    const Vector pi = logp.row(i).transpose().array().exp();
    const double adv = advantages(i);
    const double ratio = std::exp(logp(i, a) - log_probs_old(i));
    const double clipped = clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    if (ratio * adv <= clipped * adv) {  // unclipped branch active
      Vector d = -scale * adv * ratio * (-pi);
      d(a) -= scale * adv * ratio;
      grad.row(i) += d.transpose();
    }
    if (entropy_coef > 0.0) {
      const double h = entropy(pi);
      // d(-entropy)/dz_j = pi_j (log pi_j + h)
      grad.row(i) += (entropy_coef * scale) *
                     (pi.array() * (logp.row(i).transpose().array() + h))
                         .matrix()
                         .transpose();
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------

class PpoAgent : public Agent {
 public:
  PpoAgent(const PpoConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    validate(cfg_);
    Rng init = Rng::derive(seed, {0x70706f5f696e6974ULL});
    actor_ = DenseNet(kObsDim, mlp_spec(cfg_.actor_hidden, kNumActions), init);
    critic_ = DenseNet(kObsDim, mlp_spec(cfg_.critic_hidden, 1), init);
    opt_actor_ = AdamState(actor_);
    opt_critic_ = AdamState(critic_);
    rng_ = Rng::derive(seed, {0x70706f5f616374ULL});
  }

  static std::vector<LayerSpec> mlp_spec(const std::vector<int>& hidden, int out) {
    std::vector<LayerSpec> specs;
    for (int w : hidden) specs.push_back({w, Activation::kRelu, false});
    specs.push_back({out, Activation::kIdentity, false});
    return specs;
  }

  std::string kind() const override { return "ppo"; }

  int act(const Observation& obs, bool explore) override {
    const Vector logits = forward_one(actor_, obs_vector(obs));
    const Vector pi = softmax(logits);
    return explore ? sample_categorical(pi, rng_) : argmax(pi);
  }

  void observe_step(const Transition& t) override {
    episode_.push_back(t);
  }

  void on_episode_end() override {
    if (episode_.empty()) return;
    update();
    episode_.clear();
  }

  std::size_t param_count() const override {
    return count_params(actor_) + count_params(critic_);
  }

  std::vector<std::string> diagnostics_header() const override {
    return {"update", "surrogate", "kl", "entropy", "mean_return"};
  }

  std::vector<std::vector<double>> take_diagnostics() override {
    return std::move(diag_);
  }

  void serialize(BinWriter& w) const override {
    write_net(w, actor_);
    write_net(w, critic_);
    write_adam(w, opt_actor_);
    write_adam(w, opt_critic_);
    w.rng(rng_);
    w.i64(updates_);
  }

  void deserialize(BinReader& r) override {
    actor_ = read_net(r);
    critic_ = read_net(r);
    opt_actor_ = read_adam(r);
    opt_critic_ = read_adam(r);
    rng_ = r.rng();
    updates_ = r.i64();
    episode_.clear();
    diag_.clear();
  }

  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }
  const PpoConfig& config() const { return cfg_; }

 private:
  static Vector obs_vector(const Observation& o) {
    Vector v(kObsDim);
    v << o.x, o.y, o.cos_phi, o.sin_phi;
    return v;
  }

  void update() {
    const auto t_len = static_cast<Eigen::Index>(episode_.size());
    Matrix obs(t_len + 1, kObsDim);
    std::vector<int> actions(static_cast<std::size_t>(t_len));
    std::vector<double> rewards(static_cast<std::size_t>(t_len));
    double ep_return = 0.0;
    for (Eigen::Index i = 0; i < t_len; ++i) {
      const Transition& t = episode_[static_cast<std::size_t>(i)];
      obs.row(i) = obs_vector(t.obs).transpose();
      actions[static_cast<std::size_t>(i)] = t.action_id;
      rewards[static_cast<std::size_t>(i)] = t.reward;
      ep_return += t.reward;
    }
    // Episodes end on a time limit, so the value of the final next-state
    // still bootstraps the advantage recursion.
    obs.row(t_len) = obs_vector(episode_.back().next_obs).transpose();

    const Vector values = forward(critic_, obs).col(0);
    Vector adv = compute_advantages(rewards, values, cfg_.gamma, cfg_.lambda);
    const Vector returns = adv + values.head(t_len);
    if (cfg_.normalize_advantages) adv = normalize_advantages(adv);

    const Matrix obs_t = obs.topRows(t_len);
    const Matrix logp_old = log_softmax_rows(forward(actor_, obs_t));
    Vector lp_old(t_len);
    for (Eigen::Index i = 0; i < t_len; ++i)
      lp_old(i) = logp_old(i, actions[static_cast<std::size_t>(i)]);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(t_len));
    for (Eigen::Index i = 0; i < t_len; ++i) order[static_cast<std::size_t>(i)] = i;

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      // Fisher-Yates over sample order.
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng_.uniform_int(i));
        std::swap(order[i - 1], order[j]);
      }
      for (Eigen::Index begin = 0; begin < t_len; begin += cfg_.minibatch) {
        const Eigen::Index size = std::min<Eigen::Index>(cfg_.minibatch, t_len - begin);
        Matrix mb_obs(size, kObsDim);
        std::vector<int> mb_actions(static_cast<std::size_t>(size));
        Vector mb_lp_old(size), mb_adv(size), mb_ret(size);
        for (Eigen::Index k = 0; k < size; ++k) {
          const Eigen::Index src = order[static_cast<std::size_t>(begin + k)];
          mb_obs.row(k) = obs_t.row(src);
          mb_actions[static_cast<std::size_t>(k)] = actions[static_cast<std::size_t>(src)];
          mb_lp_old(k) = lp_old(src);
          mb_adv(k) = adv(src);
          mb_ret(k) = returns(src);
        }

        Tape tape;
        const Matrix logits = forward(actor_, mb_obs, nullptr, &tape);
        const Matrix dlogits = ppo_actor_loss_grad(
            logits, mb_actions, mb_lp_old, mb_adv, cfg_.clip, cfg_.entropy_coef);
        adam_step(actor_, backward(actor_, tape, dlogits), opt_actor_,
                  {.lr = cfg_.lr_actor});

        Tape vtape;
        const Matrix v = forward(critic_, mb_obs, nullptr, &vtape);
        Matrix dv = (2.0 / static_cast<double>(size)) * (v.col(0) - mb_ret);
        adam_step(critic_, backward(critic_, vtape, dv), opt_critic_,
                  {.lr = cfg_.lr_critic});
      }
    }

    // Post-update policy statistics against the collection-time policy.
    const Matrix logp_new = log_softmax_rows(forward(actor_, obs_t));
    Vector lp_new(t_len);
    double kl = 0.0, ent = 0.0;
    for (Eigen::Index i = 0; i < t_len; ++i) {
      lp_new(i) = logp_new(i, actions[static_cast<std::size_t>(i)]);
      const Vector p_old = logp_old.row(i).transpose().array().exp();
      const Vector p_new = logp_new.row(i).transpose().array().exp();
      kl += kl_divergence(p_old, p_new);
      ent += entropy(p_new);
    }
    kl /= static_cast<double>(t_len);
    ent /= static_cast<double>(t_len);
    const double surrogate = ppo_surrogate(lp_new, lp_old, adv, cfg_.clip);
    ++updates_;
    diag_.push_back({static_cast<double>(updates_), surrogate, kl, ent, ep_return});
  }

  PpoConfig cfg_;
  DenseNet actor_, critic_;
  AdamState opt_actor_, opt_critic_;
  Rng rng_;
  std::vector<Transition> episode_;
  std::vector<std::vector<double>> diag_;
  std::int64_t updates_ = 0;
};

}  // namespace vholab
