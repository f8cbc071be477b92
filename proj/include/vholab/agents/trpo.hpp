#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vholab/agents/agent.hpp"
#include "vholab/agents/rollout.hpp"
#include "vholab/env.hpp"
#include "vholab/nn/adam.hpp"
#include "vholab/nn/dist.hpp"
#include "vholab/nn/net.hpp"

namespace vholab {

struct TrpoConfig {
  double kl_delta = 0.005;
  int hidden_width = 64;
  int line_search_max_iter = 20;
  int cg_iters = 10;
  double cg_damping = 0.1;
  double lr_critic = 1e-3;
  double gamma = 0.99;
  double lambda = 0.95;
  int critic_epochs = 10;
  int minibatch = 256;
  bool normalize_advantages = true;
};

inline void validate(const TrpoConfig& c) {
  require_config(c.kl_delta > 0.0, "trpo: kl_delta must be positive");
  require_config(c.hidden_width > 0, "trpo: hidden_width must be positive");
  require_config(c.line_search_max_iter > 0, "trpo: line_search_max_iter must be positive");
  require_config(c.cg_iters > 0, "trpo: cg_iters must be positive");
  require_config(c.cg_damping >= 0.0, "trpo: cg_damping must be non-negative");
  require_config(c.lr_critic > 0.0, "trpo: lr_critic must be positive");
  require_config(c.gamma >= 0.0 && c.gamma <= 1.0, "trpo: gamma must lie in [0, 1]");
  require_config(c.lambda >= 0.0 && c.lambda <= 1.0, "trpo: lambda must lie in [0, 1]");
  require_config(c.critic_epochs > 0 && c.minibatch > 0,
                 "trpo: critic_epochs and minibatch must be positive");
}

/// Solves A x = b for symmetric positive definite A given only the
/// matrix-vector product.  Plain conjugate gradients from x0 = 0 with a
/// residual-norm stopping test.
template <typename Avp>
Vector conjugate_gradient(Avp&& avp, const Vector& b, int max_iters,
                          double residual_tol = 1e-10) {
  Vector x = Vector::Zero(b.size());
  Vector r = b;
  Vector p = b;
  double rs = r.squaredNorm();
  for (int i = 0; i < max_iters && rs > residual_tol; ++i) {
    const Vector ap = avp(p);
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) break;  // not PD along p; keep the current iterate
    const double alpha = rs / curvature;
    x += alpha * p;
    r -= alpha * ap;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  return x;
}

/// Fisher-vector product for a categorical policy head: F v averaged over
/// the batch, computed as J^T (diag(pi) - pi pi^T) J v without forming the
/// Fisher matrix.  The tape must come from a noiseless forward on obs.
inline Vector fisher_vector_product(const DenseNet& actor, const Tape& tape,
                                    const Matrix& probs, const Vector& v) {
  std::vector<Matrix> dir_w;
  std::vector<Vector> dir_b;
  unflatten_direction(actor, v, dir_w, dir_b);
  const Matrix u = jvp(actor, tape, dir_w, dir_b);  // B x actions
  const double inv_b = 1.0 / static_cast<double>(probs.rows());
  Matrix w(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double pu = probs.row(i).dot(u.row(i));
    w.row(i) = inv_b * (probs.row(i).array() * (u.row(i).array() - pu)).matrix();
  }
  const Gradients g = backward(actor, tape, w);
  return grad_vector(actor, g);
}

class TrpoAgent : public Agent {
 public:
  TrpoAgent(const TrpoConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    validate(cfg_);
    Rng init = Rng::derive(seed, {0x7472706f5f696eULL});
    actor_ = DenseNet(kObsDim,
                      {{cfg_.hidden_width, Activation::kRelu, false},
                       {kNumActions, Activation::kIdentity, false}},
                      init);
    critic_ = DenseNet(kObsDim,
                       {{cfg_.hidden_width, Activation::kRelu, false},
                        {1, Activation::kIdentity, false}},
                       init);
    opt_critic_ = AdamState(critic_);
    rng_ = Rng::derive(seed, {0x7472706f5f6163ULL});
  }

  std::string kind() const override { return "trpo"; }

  int act(const Observation& obs, bool explore) override {
    const Vector pi = softmax(forward_one(actor_, obs_vector(obs)));
    return explore ? sample_categorical(pi, rng_) : argmax(pi);
  }

  void observe_step(const Transition& t) override { episode_.push_back(t); }

  void on_episode_end() override {
    if (episode_.empty()) return;
    update();
    episode_.clear();
  }

  std::size_t param_count() const override {
    return count_params(actor_) + count_params(critic_);
  }

  std::vector<std::string> diagnostics_header() const override {
    return {"update", "improvement", "kl", "entropy", "mean_return", "accepted"};
  }

  std::vector<std::vector<double>> take_diagnostics() override {
    return std::move(diag_);
  }

  void serialize(BinWriter& w) const override {
    write_net(w, actor_);
    write_net(w, critic_);
    write_adam(w, opt_critic_);
    w.rng(rng_);
    w.i64(updates_);
  }

  void deserialize(BinReader& r) override {
    actor_ = read_net(r);
    critic_ = read_net(r);
    opt_critic_ = read_adam(r);
    rng_ = r.rng();
    updates_ = r.i64();
    episode_.clear();
    diag_.clear();
  }

  const DenseNet& actor() const { return actor_; }
  const TrpoConfig& config() const { return cfg_; }

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
    obs.row(t_len) = obs_vector(episode_.back().next_obs).transpose();

    const Vector values = forward(critic_, obs).col(0);
    Vector adv = compute_advantages(rewards, values, cfg_.gamma, cfg_.lambda);
    const Vector returns = adv + values.head(t_len);
    if (cfg_.normalize_advantages) adv = normalize_advantages(adv);

    const Matrix obs_t = obs.topRows(t_len);
    Tape tape;
    const Matrix logits_old = forward(actor_, obs_t, nullptr, &tape);
    const Matrix logp_old = log_softmax_rows(logits_old);
    const Matrix probs_old = logp_old.array().exp();
    Vector lp_old(t_len);
    for (Eigen::Index i = 0; i < t_len; ++i)
      lp_old(i) = logp_old(i, actions[static_cast<std::size_t>(i)]);

    // Policy gradient of the surrogate at the old parameters (ratio = 1):
    // dL/dz_i = A_i (onehot(a_i) - pi_i) / B.
    const double inv_b = 1.0 / static_cast<double>(t_len);
    Matrix dlogits = Matrix::Zero(t_len, kNumActions);
    for (Eigen::Index i = 0; i < t_len; ++i) {
      dlogits.row(i) = -inv_b * adv(i) * probs_old.row(i);
      dlogits(i, actions[static_cast<std::size_t>(i)]) += inv_b * adv(i);
    }
    const Vector g = grad_vector(actor_, backward(actor_, tape, dlogits));

    double achieved_kl = 0.0, improvement = 0.0;
    bool accepted = false;
    if (g.norm() > 1e-12) {
      auto fvp = [&](const Vector& v) -> Vector {
        return fisher_vector_product(actor_, tape, probs_old, v) +
               cfg_.cg_damping * v;
      };
      const Vector x = conjugate_gradient(fvp, g, cfg_.cg_iters);
      const double quad = x.dot(fvp(x));
      if (quad > 0.0 && x.allFinite()) {
        const Vector full_step = std::sqrt(2.0 * cfg_.kl_delta / quad) * x;
        const Vector theta_old = param_vector(actor_);
        const double surr_old = surrogate(obs_t, actions, lp_old, adv);

        double scale = 1.0;
        for (int k = 0; k < cfg_.line_search_max_iter; ++k, scale *= 0.5) {
          set_params(actor_, theta_old + scale * full_step);
          const double surr_new = surrogate(obs_t, actions, lp_old, adv);
          const double kl = mean_kl(obs_t, probs_old);
          if (std::isfinite(surr_new) && surr_new - surr_old >= 0.0 &&
              kl <= cfg_.kl_delta) {
            accepted = true;
            achieved_kl = kl;
            improvement = surr_new - surr_old;
            break;
          }
        }
        if (!accepted) set_params(actor_, theta_old);
      }
    }

    train_critic(obs_t, returns);

    double ent = 0.0;
    const Matrix logp_new = log_softmax_rows(forward(actor_, obs_t));
    for (Eigen::Index i = 0; i < t_len; ++i)
      ent += entropy(logp_new.row(i).transpose().array().exp());
    ent /= static_cast<double>(t_len);

    ++updates_;
    diag_.push_back({static_cast<double>(updates_), improvement, achieved_kl,
                     ent, ep_return, accepted ? 1.0 : 0.0});
  }

  double surrogate(const Matrix& obs, const std::vector<int>& actions,
                   const Vector& lp_old, const Vector& adv) const {
    const Matrix logp = log_softmax_rows(forward(actor_, obs));
    double total = 0.0;
    for (Eigen::Index i = 0; i < obs.rows(); ++i) {
      const double ratio =
          std::exp(logp(i, actions[static_cast<std::size_t>(i)]) - lp_old(i));
      total += ratio * adv(i);
    }
    return total / static_cast<double>(obs.rows());
  }

  double mean_kl(const Matrix& obs, const Matrix& probs_old) const {
    const Matrix logp = log_softmax_rows(forward(actor_, obs));
    double kl = 0.0;
    for (Eigen::Index i = 0; i < obs.rows(); ++i) {
      kl += kl_divergence(probs_old.row(i).transpose(),
                          logp.row(i).transpose().array().exp().matrix());
    }
    return kl / static_cast<double>(obs.rows());
  }

  void train_critic(const Matrix& obs, const Vector& returns) {
    const Eigen::Index t_len = obs.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(t_len));
    for (Eigen::Index i = 0; i < t_len; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int epoch = 0; epoch < cfg_.critic_epochs; ++epoch) {
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng_.uniform_int(i));
        std::swap(order[i - 1], order[j]);
      }
      for (Eigen::Index begin = 0; begin < t_len; begin += cfg_.minibatch) {
        const Eigen::Index size = std::min<Eigen::Index>(cfg_.minibatch, t_len - begin);
        Matrix mb_obs(size, kObsDim);
        Vector mb_ret(size);
        for (Eigen::Index k = 0; k < size; ++k) {
          const Eigen::Index src = order[static_cast<std::size_t>(begin + k)];
          mb_obs.row(k) = obs.row(src);
          mb_ret(k) = returns(src);
        }
        Tape tape;
        const Matrix v = forward(critic_, mb_obs, nullptr, &tape);
        Matrix dv = (2.0 / static_cast<double>(size)) * (v.col(0) - mb_ret);
        adam_step(critic_, backward(critic_, tape, dv), opt_critic_,
                  {.lr = cfg_.lr_critic});
      }
    }
  }

  TrpoConfig cfg_;
  DenseNet actor_, critic_;
  AdamState opt_critic_;
  Rng rng_;
  std::vector<Transition> episode_;
  std::vector<std::vector<double>> diag_;
  std::int64_t updates_ = 0;
};

}  // namespace vholab
