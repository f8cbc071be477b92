#pragma once

#include <array>
#include <vector>

#include "vholab/env.hpp"
#include "vholab/errors.hpp"
#include "vholab/io/binio.hpp"
#include "vholab/math/rng.hpp"

namespace vholab {

struct ReplayTransition {
  std::array<double, kObsDim> obs{};
  std::array<double, kObsDim> next_obs{};
  int action = 0;
  double reward = 0.0;
  bool done = false;
};

inline void write_replay_transition(BinWriter& w, const ReplayTransition& t) {
  for (double v : t.obs) w.f64(v);
  for (double v : t.next_obs) w.f64(v);
  w.i64(t.action);
  w.f64(t.reward);
  w.u8(t.done ? 1 : 0);
}

inline ReplayTransition read_replay_transition(BinReader& r) {
  ReplayTransition t;
  for (double& v : t.obs) v = r.f64();
  for (double& v : t.next_obs) v = r.f64();
  t.action = static_cast<int>(r.i64());
  t.reward = r.f64();
  t.done = r.u8() != 0;
  return t;
}

/// Uniform experience replay over a fixed-capacity ring.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, "ReplayBuffer: capacity must be positive");
    data_.reserve(capacity);
  }

  void push(const ReplayTransition& t) {
    if (data_.size() < capacity_) {
      data_.push_back(t);
    } else {
      data_[head_] = t;  // overwrite oldest
    }
    head_ = (head_ + 1) % capacity_;
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const ReplayTransition& at(std::size_t i) const { return data_[i]; }

  std::vector<std::size_t> sample_indices(int batch, Rng& rng) const {
    require(size() >= static_cast<std::size_t>(batch),
            "ReplayBuffer: fewer transitions than batch size");
    std::vector<std::size_t> out(static_cast<std::size_t>(batch));
    for (auto& i : out) i = rng.uniform_int(size());
    return out;
  }

  void serialize(BinWriter& w) const {
    w.u64(capacity_);
    w.u64(head_);
    w.u64(data_.size());
    for (const auto& t : data_) write_replay_transition(w, t);
  }

  static ReplayBuffer deserialize(BinReader& r) {
    const std::size_t capacity = r.u64();
    ReplayBuffer buf(capacity);
    buf.head_ = r.u64();
    const std::uint64_t n = r.u64();
    buf.data_.resize(n);
    for (auto& t : buf.data_) t = read_replay_transition(r);
    return buf;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<ReplayTransition> data_;
};

}  // namespace vholab
