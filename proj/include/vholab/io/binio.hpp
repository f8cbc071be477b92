#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vholab/errors.hpp"
#include "vholab/math/rng.hpp"
#include "vholab/nn/adam.hpp"
#include "vholab/nn/net.hpp"

namespace vholab {

// Little-endian binary encoding helpers used by the checkpoint format.
// Serialization order is fixed by the call sequence, so identical state
// always produces identical bytes.

class BinWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }

  void str(const std::string& s) {
    u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  void doubles(const double* data, std::size_t count) {
    u64(count);
    for (std::size_t i = 0; i < count; ++i) f64(data[i]);
  }

  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }

  void vector(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }

  void rng(const Rng& r) {
    for (auto w : r.state()) u64(w);
  }

  void blob(const std::vector<std::uint8_t>& b) {
    u64(b.size());
    buf_.insert(buf_.end(), b.begin(), b.end());
  }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class BinReader {
 public:
  explicit BinReader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}

  std::uint8_t u8() { return take(1)[0]; }

  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string str() {
    const std::uint64_t n = u64();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  std::vector<double> doubles() {
    const std::uint64_t n = u64();
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }

  Matrix matrix() {
    const auto rows = static_cast<Eigen::Index>(u64());
    const auto cols = static_cast<Eigen::Index>(u64());
    require_data(rows >= 0 && cols >= 0, "negative matrix shape");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }

  Vector vector() {
    const auto n = static_cast<Eigen::Index>(u64());
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = f64();
    return v;
  }

  Rng rng() {
    std::array<std::uint64_t, 4> s;
    for (auto& w : s) w = u64();
    Rng r;
    r.set_state(s);
    return r;
  }

  std::vector<std::uint8_t> blob() {
    const std::uint64_t n = u64();
    const auto* p = take(n);
    return std::vector<std::uint8_t>(p, p + n);
  }

  bool exhausted() const { return at_ == buf_.size(); }

 private:
  static void require_data(bool cond, const std::string& what) {
    if (!cond) throw DataError("corrupt checkpoint payload: " + what);
  }

  const std::uint8_t* take(std::uint64_t n) {
    require_data(at_ + n <= buf_.size(), "truncated payload");
    const std::uint8_t* p = buf_.data() + at_;
    at_ += n;
    return p;
  }

  std::vector<std::uint8_t> buf_;
  std::size_t at_ = 0;
};

// Whole-network (de)serialization, including noise scales and optimizer moments.

inline void write_net(BinWriter& w, const DenseNet& net) {
  w.u64(static_cast<std::uint64_t>(net.input_dim()));
  w.u64(net.layers().size());
  for (const auto& l : net.layers()) {
    w.u8(static_cast<std::uint8_t>(l.act));
    w.u8(l.noisy ? 1 : 0);
    w.matrix(l.w);
    w.vector(l.b);
    if (l.noisy) {
      w.matrix(l.w_sigma);
      w.vector(l.b_sigma);
    }
  }
}

inline DenseNet read_net(BinReader& r) {
  const int input_dim = static_cast<int>(r.u64());
  const std::uint64_t n = r.u64();
  std::vector<LayerSpec> specs;
  std::vector<Affine> layers(n);
  for (auto& l : layers) {
    l.act = static_cast<Activation>(r.u8());
    l.noisy = r.u8() != 0;
    l.w = r.matrix();
    l.b = r.vector();
    if (l.noisy) {
      l.w_sigma = r.matrix();
      l.b_sigma = r.vector();
    }
  }
  // Rebuild through a throwaway then overwrite, to reuse shape checks.
  Rng scratch(0);
  specs.reserve(n);
  int in = input_dim;
  for (const auto& l : layers) {
    specs.push_back({l.fan_out(), l.act, l.noisy});
    in = l.fan_out();
  }
  (void)in;
  DenseNet net(input_dim, specs, scratch);
  net.layers() = std::move(layers);
  return net;
}

inline void write_adam(BinWriter& w, const AdamState& s) {
  w.i64(s.step);
  w.u64(s.m_w.size());
  for (std::size_t i = 0; i < s.m_w.size(); ++i) {
    w.matrix(s.m_w[i]);
    w.matrix(s.v_w[i]);
    w.vector(s.m_b[i]);
    w.vector(s.v_b[i]);
    const bool noisy = s.m_ws[i].size() > 0;
    w.u8(noisy ? 1 : 0);
    if (noisy) {
      w.matrix(s.m_ws[i]);
      w.matrix(s.v_ws[i]);
      w.vector(s.m_bs[i]);
      w.vector(s.v_bs[i]);
    }
  }
}

inline AdamState read_adam(BinReader& r) {
  AdamState s;
  s.step = r.i64();
  const std::uint64_t n = r.u64();
  s.m_w.resize(n); s.v_w.resize(n); s.m_b.resize(n); s.v_b.resize(n);
  s.m_ws.resize(n); s.v_ws.resize(n); s.m_bs.resize(n); s.v_bs.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    s.m_w[i] = r.matrix();
    s.v_w[i] = r.matrix();
    s.m_b[i] = r.vector();
    s.v_b[i] = r.vector();
    if (r.u8()) {
      s.m_ws[i] = r.matrix();
      s.v_ws[i] = r.matrix();
      s.m_bs[i] = r.vector();
      s.v_bs[i] = r.vector();
    }
  }
  return s;
}

}  // namespace vholab
