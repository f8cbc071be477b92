#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "vholab/agents/agent.hpp"
#include "vholab/agents/replay.hpp"
#include "vholab/env.hpp"
#include "vholab/nn/adam.hpp"
#include "vholab/nn/dist.hpp"
#include "vholab/nn/net.hpp"

namespace vholab {

struct RainbowConfig {
  int atoms = 25;
  double v_min = -1.0;
  double v_max = 1.0;
  int n_step = 3;
  double per_alpha = 0.3;       // priority exponent
  double per_beta0 = 0.7;       // initial importance-sampling exponent
  long per_beta_anneal = 40000; // updates until beta reaches 1
  double per_eps = 1e-4;        // added to priorities
  double lr = 1e-4;
  int batch = 32;
  std::size_t replay_capacity = 100000;
  int warmup_steps = 1000;
  int update_every = 8;
  long target_sync = 500;       // hard target copy, in updates
  // Short value horizon: keeps n-step targets inside the [v_min, v_max]
  // support (max target 0.9 * (1 + 0.1 + 0.01) + 0.001 = 1.0), so per-link
  // costs stay visible instead of clamping away.  Vehicle motion does not
  // depend on the action, so the greedy ranking is the same for any gamma.
  double gamma = 0.1;
  double eps_greedy = 0.01;     // exploration floor on top of noisy layers
  int trunk_width = 128;
  int stream_width = 128;
  bool noisy = true;
};

inline void validate(const RainbowConfig& c) {
  require_config(c.atoms >= 2, "rainbow: need at least two atoms");
  require_config(c.v_min < c.v_max, "rainbow: v_min must be below v_max");
  require_config(c.n_step >= 1, "rainbow: n_step must be positive");
  require_config(c.per_alpha >= 0.0, "rainbow: per_alpha must be non-negative");
  require_config(c.per_beta0 >= 0.0 && c.per_beta0 <= 1.0,
                 "rainbow: per_beta0 must lie in [0, 1]");
  require_config(c.per_beta_anneal > 0, "rainbow: per_beta_anneal must be positive");
  require_config(c.per_eps > 0.0, "rainbow: per_eps must be positive");
  require_config(c.lr > 0.0, "rainbow: lr must be positive");
  require_config(c.batch > 0, "rainbow: batch must be positive");
  require_config(c.replay_capacity >= static_cast<std::size_t>(c.batch),
                 "rainbow: replay capacity must hold at least one batch");
  require_config(c.warmup_steps >= 0, "rainbow: warmup_steps must be non-negative");
  require_config(c.update_every > 0, "rainbow: update_every must be positive");
  require_config(c.target_sync > 0, "rainbow: target_sync must be positive");
  require_config(c.gamma >= 0.0 && c.gamma <= 1.0, "rainbow: gamma must lie in [0, 1]");
  require_config(c.eps_greedy >= 0.0 && c.eps_greedy <= 1.0,
                 "rainbow: eps_greedy must lie in [0, 1]");
  require_config(c.trunk_width > 0 && c.stream_width > 0,
                 "rainbow: widths must be positive");
}

// ---------------------------------------------------------------------------
// Distribution support and categorical projection.
// ---------------------------------------------------------------------------

struct Support {
  int atoms;
  double v_min, v_max;

  double delta() const { return (v_max - v_min) / static_cast<double>(atoms - 1); }
  double z(int i) const { return v_min + delta() * static_cast<double>(i); }

  Vector values() const {
    Vector v(atoms);
    for (int i = 0; i < atoms; ++i) v(i) = z(i);
    return v;
  }
};

/// Projects the Bellman-shifted distribution r + discount * z (or a point
/// mass at r when the transition is terminal) back onto the fixed support,
/// splitting each shifted atom's mass linearly between its two neighbours.
/// Conserves probability mass exactly, including when targets clamp at the
/// support edges.
inline Vector categorical_project(const Vector& next_dist, double reward,
                                  double discount, bool done,
                                  const Support& support) {
  require(next_dist.size() == support.atoms,
          "categorical_project: distribution does not match support");
  const double dz = support.delta();
  Vector m = Vector::Zero(support.atoms);
  for (int j = 0; j < support.atoms; ++j) {
    const double p = next_dist(j);
    const double tz =
        clip(reward + (done ? 0.0 : discount * support.z(j)), support.v_min,
             support.v_max);
    const double b = (tz - support.v_min) / dz;
    const int lo = static_cast<int>(std::floor(b));
    const int hi = static_cast<int>(std::ceil(b));
    if (lo == hi) {
      m(lo) += p;
    } else {
      m(lo) += p * (static_cast<double>(hi) - b);
      m(hi) += p * (b - static_cast<double>(lo));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Segment tree over priorities: prefix-sum search for sampling plus a
// running minimum for importance-weight normalization.
// ---------------------------------------------------------------------------

class PriorityTree {
 public:
  explicit PriorityTree(std::size_t capacity) {
    require(capacity > 0, "PriorityTree: capacity must be positive");
    leaves_ = 1;
    while (leaves_ < capacity) leaves_ *= 2;
    sum_.assign(2 * leaves_, 0.0);
    min_.assign(2 * leaves_, std::numeric_limits<double>::infinity());
  }

  void set(std::size_t i, double value) {
    require(i < leaves_, "PriorityTree: index out of range");
    require(value >= 0.0 && std::isfinite(value),
            "PriorityTree: priority must be finite and non-negative");
    std::size_t node = leaves_ + i;
    sum_[node] = value;
    min_[node] = value;
    for (node /= 2; node >= 1; node /= 2) {
      sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
      min_[node] = std::min(min_[2 * node], min_[2 * node + 1]);
    }
  }

  double get(std::size_t i) const { return sum_[leaves_ + i]; }
  double total() const { return sum_[1]; }
  double min_value() const { return min_[1]; }

  /// Index of the first leaf whose prefix sum exceeds u (0 <= u < total).
  std::size_t find_prefix(double u) const {
    require(total() > 0.0, "PriorityTree: cannot sample from empty tree");
    std::size_t node = 1;
    while (node < leaves_) {
      const std::size_t left = 2 * node;
      if (u < sum_[left]) {
        node = left;
      } else {
        u -= sum_[left];
        node = left + 1;
      }
    }
    return node - leaves_;
  }

 private:
  std::size_t leaves_ = 0;
  std::vector<double> sum_;
  std::vector<double> min_;
};

// ---------------------------------------------------------------------------
// N-step return assembly.  Emits one aggregated transition per raw step once
// the window is full, and flushes truncated windows at episode end.
// ---------------------------------------------------------------------------

struct NStepTransition {
  std::array<double, kObsDim> obs{};
  std::array<double, kObsDim> next_obs{};
  int action = 0;
  double reward = 0.0;  // discounted sum over the window
  bool done = false;
  int steps = 1;  // effective window length (discount = gamma^steps)
};

/// Collapses raw transitions [first, first + count) into one n-step record.
inline NStepTransition nstep_aggregate(const std::deque<ReplayTransition>& window,
                                       std::size_t first, std::size_t count,
                                       double gamma) {
  require(count >= 1 && first + count <= window.size(),
          "nstep_aggregate: bad window");
  NStepTransition out;
  const ReplayTransition& head = window[first];
  const ReplayTransition& tail = window[first + count - 1];
  out.obs = head.obs;
  out.action = head.action;
  out.next_obs = tail.next_obs;
  out.done = tail.done;
  out.steps = static_cast<int>(count);
  double g = 1.0;
  for (std::size_t k = 0; k < count; ++k) {
    out.reward += g * window[first + k].reward;
    g *= gamma;
  }
  return out;
}

class NStepAssembler {
 public:
  NStepAssembler(int n, double gamma) : n_(n), gamma_(gamma) {}

  void push(const ReplayTransition& t, std::vector<NStepTransition>& out) {
    pending_.push_back(t);
    if (t.done) {
      // Flush every suffix so no experience is dropped at episode end.
      for (std::size_t first = 0; first < pending_.size(); ++first)
        out.push_back(nstep_aggregate(pending_, first, pending_.size() - first,
                                      gamma_));
      pending_.clear();
      return;
    }
    if (pending_.size() == static_cast<std::size_t>(n_)) {
      out.push_back(nstep_aggregate(pending_, 0, pending_.size(), gamma_));
      pending_.pop_front();
    }
  }

  void serialize(BinWriter& w) const {
    w.u64(pending_.size());
    for (const auto& t : pending_) write_replay_transition(w, t);
  }

  void deserialize(BinReader& r) {
    pending_.clear();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i)
      pending_.push_back(read_replay_transition(r));
  }

 private:
  int n_;
  double gamma_;
  std::deque<ReplayTransition> pending_;
};

// ---------------------------------------------------------------------------
// Proportional prioritized replay.
// ---------------------------------------------------------------------------

class PrioritizedReplay {
 public:
  PrioritizedReplay(std::size_t capacity, double alpha)
      : capacity_(capacity), alpha_(alpha), tree_(capacity) {
    require(capacity > 0, "PrioritizedReplay: capacity must be positive");
    data_.reserve(capacity);
  }

  std::size_t size() const { return data_.size(); }
  const NStepTransition& at(std::size_t i) const { return data_[i]; }
  double priority(std::size_t i) const { return raw_priority_[i]; }

  /// New experience enters with the largest priority seen so far, so it is
  /// sampled at least once before being ranked by its own error.
  void push(const NStepTransition& t) {
    std::size_t slot;
    if (data_.size() < capacity_) {
      data_.push_back(t);
      raw_priority_.push_back(max_priority_);
      slot = data_.size() - 1;
    } else {
      slot = head_;
      data_[slot] = t;
      raw_priority_[slot] = max_priority_;
      head_ = (head_ + 1) % capacity_;
    }
    tree_.set(slot, std::pow(max_priority_, alpha_));
  }

  struct Sample {
    std::vector<std::size_t> indices;
    Vector weights;  // importance weights, normalized to max 1
  };

  /// Draws indices with probability proportional to priority^alpha and
  /// returns (N * P(i))^-beta importance weights normalized by the largest
  /// possible weight (the one belonging to the minimum priority).
  Sample sample(int batch, double beta, Rng& rng) {
    require(size() > 0, "PrioritizedReplay: cannot sample while empty");
    require(beta >= 0.0, "PrioritizedReplay: beta must be non-negative");
    Sample out;
    out.indices.resize(static_cast<std::size_t>(batch));
    out.weights.resize(batch);
    const double min_mass = tree_.min_value();
    for (int k = 0; k < batch; ++k) {
      const double u = rng.uniform() * tree_.total();
      std::size_t i = tree_.find_prefix(u);
      if (i >= size()) i = size() - 1;  // float-edge guard on the last leaf
      out.indices[static_cast<std::size_t>(k)] = i;
      // w_i / w_max = (P(i) / P_min)^-beta; totals cancel.
      out.weights(k) = std::pow(tree_.get(i) / min_mass, -beta);
    }
    return out;
  }

  void update_priorities(const std::vector<std::size_t>& indices,
                         const std::vector<double>& raw) {
    require(indices.size() == raw.size(), "update_priorities: size mismatch");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      require(raw[k] > 0.0 && std::isfinite(raw[k]),
              "update_priorities: priority must be positive and finite");
      raw_priority_[indices[k]] = raw[k];
      tree_.set(indices[k], std::pow(raw[k], alpha_));
      max_priority_ = std::max(max_priority_, raw[k]);
    }
  }

  void serialize(BinWriter& w) const {
    w.u64(capacity_);
    w.f64(alpha_);
    w.u64(head_);
    w.f64(max_priority_);
    w.u64(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const auto& t = data_[i];
      for (double v : t.obs) w.f64(v);
      for (double v : t.next_obs) w.f64(v);
      w.i64(t.action);
      w.f64(t.reward);
      w.u8(t.done ? 1 : 0);
      w.i64(t.steps);
      w.f64(raw_priority_[i]);
    }
  }

  static PrioritizedReplay deserialize(BinReader& r) {
    const std::size_t capacity = r.u64();
    const double alpha = r.f64();
    PrioritizedReplay buf(capacity, alpha);
    buf.head_ = r.u64();
    buf.max_priority_ = r.f64();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      NStepTransition t;
      for (double& v : t.obs) v = r.f64();
      for (double& v : t.next_obs) v = r.f64();
      t.action = static_cast<int>(r.i64());
      t.reward = r.f64();
      t.done = r.u8() != 0;
      t.steps = static_cast<int>(r.i64());
      const double p = r.f64();
      buf.data_.push_back(t);
      buf.raw_priority_.push_back(p);
      buf.tree_.set(i, std::pow(p, alpha));
    }
    return buf;
  }

 private:
  std::size_t capacity_;
  double alpha_;
  std::size_t head_ = 0;
  double max_priority_ = 1.0;
  std::vector<NStepTransition> data_;
  std::vector<double> raw_priority_;
  PriorityTree tree_;
};

// ---------------------------------------------------------------------------
// Dueling distributional network: shared trunk, then value (atoms) and
// advantage (actions x atoms) streams.  Noise lives on the stream layers
// only; the trunk is deterministic.
// ---------------------------------------------------------------------------

struct RainbowNoise {
  NoiseDraw value;
  NoiseDraw adv;
};

struct RainbowTapes {
  Tape trunk, value, adv;
};

class RainbowNet {
 public:
  RainbowNet() = default;

  RainbowNet(const RainbowConfig& cfg, Rng& rng)
      : atoms_(cfg.atoms) {
    trunk_ = DenseNet(kObsDim, {{cfg.trunk_width, Activation::kRelu, false}}, rng);
    value_ = DenseNet(cfg.trunk_width,
                      {{cfg.stream_width, Activation::kRelu, cfg.noisy},
                       {cfg.atoms, Activation::kIdentity, cfg.noisy}},
                      rng);
    adv_ = DenseNet(cfg.trunk_width,
                    {{cfg.stream_width, Activation::kRelu, cfg.noisy},
                     {kNumActions * cfg.atoms, Activation::kIdentity, cfg.noisy}},
                    rng);
  }

  RainbowNoise sample(Rng& rng) const {
    return {sample_noise(value_, rng), sample_noise(adv_, rng)};
  }

  /// Dueling combination in logit space:
  /// logit(a, j) = value(j) + adv(a, j) - mean_a' adv(a', j),
  /// then a per-action log-softmax over atoms.  Layout: column a*atoms + j.
  Matrix log_dist(const Matrix& x, const RainbowNoise* noise,
                  RainbowTapes* tapes) const {
    const Matrix t = forward(trunk_, x, nullptr, tapes ? &tapes->trunk : nullptr);
    const Matrix v = forward(value_, t, noise ? &noise->value : nullptr,
                             tapes ? &tapes->value : nullptr);
    const Matrix a = forward(adv_, t, noise ? &noise->adv : nullptr,
                             tapes ? &tapes->adv : nullptr);
    Matrix logits(x.rows(), kNumActions * atoms_);
    for (Eigen::Index b = 0; b < x.rows(); ++b) {
      for (int j = 0; j < atoms_; ++j) {
        double mean_adv = 0.0;
        for (int act = 0; act < kNumActions; ++act)
          mean_adv += a(b, act * atoms_ + j);
        mean_adv /= static_cast<double>(kNumActions);
        for (int act = 0; act < kNumActions; ++act)
          logits(b, act * atoms_ + j) =
              v(b, j) + a(b, act * atoms_ + j) - mean_adv;
      }
      for (int act = 0; act < kNumActions; ++act) {
        const Vector block =
            logits.row(b).segment(act * atoms_, atoms_).transpose();
        logits.row(b).segment(act * atoms_, atoms_) =
            log_softmax(block).transpose();
      }
    }
    return logits;  // log probabilities per action block
  }

  /// Q(a) = sum_j z_j p(a, j) from a log-distribution row.
  static Vector q_from_log_dist(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                                const Support& support) {
    Vector q(kNumActions);
    for (int act = 0; act < kNumActions; ++act) {
      double total = 0.0;
      for (int j = 0; j < support.atoms; ++j)
        total += std::exp(row(act * support.atoms + j)) * support.z(j);
      q(act) = total;
    }
    return q;
  }

  /// Backpropagates a gradient with respect to the dueling logits and
  /// applies one Adam step to trunk and both streams.
  void apply_gradients(const Matrix& dlogits, const RainbowTapes& tapes,
                       AdamState& opt_trunk, AdamState& opt_value,
                       AdamState& opt_adv, const AdamConfig& adam) {
    const Eigen::Index n = dlogits.rows();
    Matrix dv(n, atoms_);
    Matrix da(n, kNumActions * atoms_);
    for (Eigen::Index b = 0; b < n; ++b) {
      for (int j = 0; j < atoms_; ++j) {
        double col_sum = 0.0;
        for (int act = 0; act < kNumActions; ++act)
          col_sum += dlogits(b, act * atoms_ + j);
        dv(b, j) = col_sum;
        const double mean_term = col_sum / static_cast<double>(kNumActions);
        for (int act = 0; act < kNumActions; ++act)
          da(b, act * atoms_ + j) = dlogits(b, act * atoms_ + j) - mean_term;
      }
    }
    Gradients gv = backward(value_, tapes.value, dv);
    Gradients ga = backward(adv_, tapes.adv, da);
    const Matrix dtrunk = gv.dinput + ga.dinput;
    Gradients gt = backward(trunk_, tapes.trunk, dtrunk);
    adam_step(trunk_, gt, opt_trunk, adam);
    adam_step(value_, gv, opt_value, adam);
    adam_step(adv_, ga, opt_adv, adam);
  }

  std::size_t param_count() const {
    return count_params(trunk_) + count_params(value_) + count_params(adv_);
  }

  const DenseNet& trunk() const { return trunk_; }
  const DenseNet& value() const { return value_; }
  const DenseNet& advantage() const { return adv_; }

  void serialize(BinWriter& w) const {
    write_net(w, trunk_);
    write_net(w, value_);
    write_net(w, adv_);
  }

  void deserialize(BinReader& r) {
    trunk_ = read_net(r);
    value_ = read_net(r);
    adv_ = read_net(r);
    atoms_ = static_cast<int>(value_.output_dim());
  }

  DenseNet trunk_, value_, adv_;
  int atoms_ = 0;
};

/// Mean parameters of the dueling architecture: shared trunk plus the two
/// stream chains.
inline std::size_t dueling_param_count(int input, int trunk, int stream_hidden,
                                       int atoms, int actions) {
  return count_params({input, trunk}) +
         count_params({trunk, stream_hidden, atoms}) +
         count_params({trunk, stream_hidden, actions * atoms});
}

// ---------------------------------------------------------------------------

class RainbowAgent : public Agent {
 public:
  RainbowAgent(const RainbowConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        support_{cfg.atoms, cfg.v_min, cfg.v_max},
        assembler_(cfg.n_step, cfg.gamma),
        replay_(cfg.replay_capacity, cfg.per_alpha) {
    validate(cfg_);
    Rng init = Rng::derive(seed, {0x72626f775f696eULL});
    online_ = RainbowNet(cfg_, init);
    target_ = online_;
    opt_trunk_ = AdamState(online_.trunk_);
    opt_value_ = AdamState(online_.value_);
    opt_adv_ = AdamState(online_.adv_);
    rng_ = Rng::derive(seed, {0x72626f775f6163ULL});
  }

  std::string kind() const override { return "rainbow"; }

  int act(const Observation& obs, bool explore) override {
    Matrix x(1, kObsDim);
    x << obs.x, obs.y, obs.cos_phi, obs.sin_phi;
    if (explore) {
      if (cfg_.eps_greedy > 0.0 && rng_.uniform() < cfg_.eps_greedy)
        return static_cast<int>(rng_.uniform_int(kNumActions));
      const RainbowNoise noise = online_.sample(rng_);
      const Matrix ld = online_.log_dist(x, cfg_.noisy ? &noise : nullptr, nullptr);
      return argmax(RainbowNet::q_from_log_dist(ld.row(0), support_));
    }
    const Matrix ld = online_.log_dist(x, nullptr, nullptr);
    return argmax(RainbowNet::q_from_log_dist(ld.row(0), support_));
  }

  void observe_step(const Transition& t) override {
    ReplayTransition rt;
    rt.obs = t.obs.as_array();
    rt.next_obs = t.next_obs.as_array();
    rt.action = t.action_id;
    rt.reward = t.reward;
    rt.done = t.done;
    scratch_.clear();
    assembler_.push(rt, scratch_);
    for (const auto& agg : scratch_) replay_.push(agg);
    ++env_steps_;
    if (env_steps_ > cfg_.warmup_steps &&
        env_steps_ % cfg_.update_every == 0 &&
        replay_.size() >= static_cast<std::size_t>(cfg_.batch)) {
      update();
    }
  }

  void on_episode_end() override {}

  std::size_t param_count() const override { return online_.param_count(); }

  std::vector<std::string> diagnostics_header() const override {
    return {"update", "loss", "mean_priority", "beta", "entropy"};
  }

  std::vector<std::vector<double>> take_diagnostics() override {
    return std::move(diag_);
  }

  void serialize(BinWriter& w) const override {
    online_.serialize(w);
    target_.serialize(w);
    write_adam(w, opt_trunk_);
    write_adam(w, opt_value_);
    write_adam(w, opt_adv_);
    w.rng(rng_);
    w.i64(env_steps_);
    w.i64(updates_);
    assembler_.serialize(w);
    replay_.serialize(w);
  }

  void deserialize(BinReader& r) override {
    online_.deserialize(r);
    target_.deserialize(r);
    opt_trunk_ = read_adam(r);
    opt_value_ = read_adam(r);
    opt_adv_ = read_adam(r);
    rng_ = r.rng();
    env_steps_ = r.i64();
    updates_ = r.i64();
    assembler_.deserialize(r);
    replay_ = PrioritizedReplay::deserialize(r);
    diag_.clear();
  }

  double current_beta() const {
    const double frac =
        std::min(1.0, static_cast<double>(updates_) /
                          static_cast<double>(cfg_.per_beta_anneal));
    return cfg_.per_beta0 + (1.0 - cfg_.per_beta0) * frac;
  }

  const RainbowNet& online() const { return online_; }
  const PrioritizedReplay& replay() const { return replay_; }
  const RainbowConfig& config() const { return cfg_; }

 private:
  void update() {
    const double beta = current_beta();
    auto s = replay_.sample(cfg_.batch, beta, rng_);
    const auto n = static_cast<Eigen::Index>(s.indices.size());

    Matrix obs(n, kObsDim), next_obs(n, kObsDim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const NStepTransition& t = replay_.at(s.indices[static_cast<std::size_t>(i)]);
      for (int d = 0; d < kObsDim; ++d) {
        obs(i, d) = t.obs[static_cast<std::size_t>(d)];
        next_obs(i, d) = t.next_obs[static_cast<std::size_t>(d)];
      }
    }

    // Fixed draw order: online at s (trained), online at s' (selection),
    // target at s' (evaluation).
    const RainbowNoise noise_online = online_.sample(rng_);
    const RainbowNoise noise_select = online_.sample(rng_);
    const RainbowNoise noise_target = target_.sample(rng_);

    RainbowTapes tapes;
    const Matrix ld = online_.log_dist(obs, cfg_.noisy ? &noise_online : nullptr,
                                       &tapes);
    const Matrix ld_select =
        online_.log_dist(next_obs, cfg_.noisy ? &noise_select : nullptr, nullptr);
    const Matrix ld_target =
        target_.log_dist(next_obs, cfg_.noisy ? &noise_target : nullptr, nullptr);

    Matrix dlogits = Matrix::Zero(n, kNumActions * support_.atoms);
    std::vector<double> new_priorities(static_cast<std::size_t>(n));
    double loss = 0.0, mean_priority = 0.0, mean_entropy = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const NStepTransition& t = replay_.at(s.indices[static_cast<std::size_t>(i)]);
      // Double-DQN: the online net picks a*, the target net evaluates it.
      const int a_star =
          argmax(RainbowNet::q_from_log_dist(ld_select.row(i), support_));
      Vector target_dist(support_.atoms);
      for (int j = 0; j < support_.atoms; ++j)
        target_dist(j) = std::exp(ld_target(i, a_star * support_.atoms + j));
      const double discount = std::pow(cfg_.gamma, t.steps);
      const Vector m =
          categorical_project(target_dist, t.reward, discount, t.done, support_);

      const int a = t.action;
      double ce = 0.0;
      double ent = 0.0;
      for (int j = 0; j < support_.atoms; ++j) {
        const double logp = ld(i, a * support_.atoms + j);
        ce -= m(j) * logp;
        const double p = std::exp(logp);
        if (p > 0.0) ent -= p * std::log(p);
        dlogits(i, a * support_.atoms + j) =
            s.weights(i) * inv_n * (p - m(j));
      }
      loss += s.weights(i) * ce * inv_n;
      mean_entropy += ent * inv_n;
      const double priority = std::abs(ce) + cfg_.per_eps;
      new_priorities[static_cast<std::size_t>(i)] = priority;
      mean_priority += priority * inv_n;
    }

    online_.apply_gradients(dlogits, tapes, opt_trunk_, opt_value_, opt_adv_,
                            {.lr = cfg_.lr});
    replay_.update_priorities(s.indices, new_priorities);

    ++updates_;
    if (updates_ % cfg_.target_sync == 0) target_ = online_;
    diag_.push_back({static_cast<double>(updates_), loss, mean_priority, beta,
                     mean_entropy});
  }

  RainbowConfig cfg_;
  Support support_;
  RainbowNet online_, target_;
  AdamState opt_trunk_, opt_value_, opt_adv_;
  Rng rng_;
  NStepAssembler assembler_;
  PrioritizedReplay replay_;
  std::vector<NStepTransition> scratch_;
  std::vector<std::vector<double>> diag_;
  std::int64_t env_steps_ = 0;
  std::int64_t updates_ = 0;
};

}  // namespace vholab
