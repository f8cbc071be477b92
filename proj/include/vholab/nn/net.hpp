#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "vholab/errors.hpp"
#include "vholab/math/rng.hpp"

namespace vholab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Small fully-connected networks with explicit reverse-mode gradients.
//
// Everything is double precision and value-semantic.  A forward pass can
// record a Tape (layer inputs and pre-activations); backward() consumes the
// tape and returns gradients for every parameter plus the input.  Layers can
// carry factorized noise on their weights (mean + scale parameterization);
// noise draws are made explicitly by the caller so that a pass is exactly
// reproducible, and a null draw means noiseless evaluation with the means.
// ---------------------------------------------------------------------------

enum class Activation { kIdentity, kRelu, kTanh };

inline void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      return;
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      return;
  }
}

/// Multiplies dy (in place) by the activation derivative at pre-activation z.
inline void activation_backward(Activation act, const Matrix& z, Matrix& dy) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      dy.array() = (z.array() > 0.0).select(dy.array(), 0.0);
      return;
    case Activation::kTanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      dy.array() *= 1.0 - t * t;
      return;
    }
  }
}

struct LayerSpec {
  int width = 0;
  Activation act = Activation::kIdentity;
  bool noisy = false;
};

struct Affine {
  Matrix w;        // out x in
  Vector b;        // out
  Matrix w_sigma;  // out x in, empty unless noisy
  Vector b_sigma;  // out, empty unless noisy
  Activation act = Activation::kIdentity;
  bool noisy = false;

  int fan_in() const { return static_cast<int>(w.cols()); }
  int fan_out() const { return static_cast<int>(w.rows()); }
};

class DenseNet {
 public:
  DenseNet() = default;

  /// Builds a chain of affine layers.  Weights and biases are drawn from
  /// U(-1/sqrt(fan_in), +1/sqrt(fan_in)) in a fixed order (weights row by
  /// row, then bias); noise scales start at 0.5/sqrt(fan_in).
  DenseNet(int input_dim, const std::vector<LayerSpec>& specs, Rng& rng)
      : input_dim_(input_dim) {
    require(input_dim > 0, "DenseNet: input_dim must be positive");
    require(!specs.empty(), "DenseNet: need at least one layer");
    int in = input_dim;
    layers_.reserve(specs.size());
    for (const auto& spec : specs) {
      require(spec.width > 0, "DenseNet: layer width must be positive");
      Affine layer;
      layer.act = spec.act;
      layer.noisy = spec.noisy;
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      layer.w.resize(spec.width, in);
      for (int r = 0; r < spec.width; ++r)
        for (int c = 0; c < in; ++c) layer.w(r, c) = rng.uniform(-bound, bound);
      layer.b.resize(spec.width);
      for (int r = 0; r < spec.width; ++r) layer.b(r) = rng.uniform(-bound, bound);
      if (spec.noisy) {
        layer.w_sigma = Matrix::Constant(spec.width, in, 0.5 * bound);
        layer.b_sigma = Vector::Constant(spec.width, 0.5 * bound);
      }
      layers_.push_back(std::move(layer));
      in = spec.width;
    }
  }

  int input_dim() const { return input_dim_; }
  int output_dim() const { return layers_.back().fan_out(); }
  const std::vector<Affine>& layers() const { return layers_; }
  std::vector<Affine>& layers() { return layers_; }
  bool has_noisy_layers() const {
    for (const auto& l : layers_)
      if (l.noisy) return true;
    return false;
  }

 private:
  std::vector<Affine> layers_;
  int input_dim_ = 0;
};

/// Factorized noise vectors for one pass: f(eps) = sign(eps) sqrt(|eps|)
/// per input and output unit of each noisy layer (empty otherwise).  The
/// bias shares the output factor.
struct NoiseDraw {
  std::vector<Vector> f_in;
  std::vector<Vector> f_out;
};

inline NoiseDraw sample_noise(const DenseNet& net, Rng& rng) {
  NoiseDraw draw;
  draw.f_in.resize(net.layers().size());
  draw.f_out.resize(net.layers().size());
  auto shaped = [&rng](int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) {
      const double e = rng.normal();
      v(i) = (e < 0.0 ? -1.0 : 1.0) * std::sqrt(std::abs(e));
    }
    return v;
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Affine& layer = net.layers()[l];
    if (!layer.noisy) continue;
    draw.f_in[l] = shaped(layer.fan_in());
    draw.f_out[l] = shaped(layer.fan_out());
  }
  return draw;
}

struct Tape {
  std::vector<Matrix> inputs;   // per layer, batch x fan_in
  std::vector<Matrix> preacts;  // per layer, batch x fan_out
  NoiseDraw noise;              // copy of the draw used (empty if none)
  bool has_noise = false;
};

/// Forward pass on a batch (rows = samples).  Passing a tape records the
/// intermediates needed by backward(); passing a noise draw perturbs noisy
/// layers, otherwise their mean parameters are used.
inline Matrix forward(const DenseNet& net, const Matrix& x,
                      const NoiseDraw* noise = nullptr, Tape* tape = nullptr) {
  require(x.cols() == net.input_dim(), "forward: input width mismatch");
  if (tape) {
    tape->inputs.assign(net.layers().size(), Matrix());
    tape->preacts.assign(net.layers().size(), Matrix());
    tape->has_noise = noise != nullptr;
    if (noise) tape->noise = *noise;
  }
  Matrix a = x;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Affine& layer = net.layers()[l];
    if (tape) tape->inputs[l] = a;
    Matrix z = a * layer.w.transpose();
    z.rowwise() += layer.b.transpose();
    if (layer.noisy && noise) {
      const Vector& fi = noise->f_in[l];
      const Vector& fo = noise->f_out[l];
      require(fi.size() == layer.fan_in() && fo.size() == layer.fan_out(),
              "forward: noise draw shape mismatch");
      Matrix xs = a.array().rowwise() * fi.transpose().array();
      Matrix s = xs * layer.w_sigma.transpose();
      s.array().rowwise() *= fo.transpose().array();
      z += s;
      z.rowwise() += layer.b_sigma.cwiseProduct(fo).transpose();
    }
    if (tape) tape->preacts[l] = z;
    apply_activation(layer.act, z);
    a = std::move(z);
  }
  return a;
}

/// Single-sample convenience wrapper.
inline Vector forward_one(const DenseNet& net, const Vector& x,
                          const NoiseDraw* noise = nullptr,
                          Tape* tape = nullptr) {
  Matrix row(1, x.size());
  row.row(0) = x.transpose();
  return forward(net, row, noise, tape).row(0).transpose();
}

struct Gradients {
  std::vector<Matrix> dw;
  std::vector<Vector> db;
  std::vector<Matrix> dw_sigma;  // empty per layer unless noisy
  std::vector<Vector> db_sigma;
  Matrix dinput;  // batch x input_dim
};

/// Reverse-mode pass.  dy is the gradient of the scalar loss with respect
/// to the network output (batch x out).  Returns parameter gradients summed
/// over the batch; apply any 1/batch factor in dy.
inline Gradients backward(const DenseNet& net, const Tape& tape,
                          const Matrix& dy) {
  const auto n = net.layers().size();
  require(tape.inputs.size() == n, "backward: tape does not match network");
  Gradients g;
  g.dw.resize(n);
  g.db.resize(n);
  g.dw_sigma.resize(n);
  g.db_sigma.resize(n);
  Matrix grad = dy;
  for (std::size_t i = n; i-- > 0;) {
    const Affine& layer = net.layers()[i];
    activation_backward(layer.act, tape.preacts[i], grad);
    g.dw[i] = grad.transpose() * tape.inputs[i];
    g.db[i] = grad.colwise().sum().transpose();
    Matrix dx = grad * layer.w;
    if (layer.noisy && tape.has_noise) {
      const Vector& fi = tape.noise.f_in[i];
      const Vector& fo = tape.noise.f_out[i];
      Matrix gs = grad.array().rowwise() * fo.transpose().array();
      Matrix xs = tape.inputs[i].array().rowwise() * fi.transpose().array();
      g.dw_sigma[i] = gs.transpose() * xs;
      g.db_sigma[i] = gs.colwise().sum().transpose();
      dx.array() += (gs * layer.w_sigma).array().rowwise() * fi.transpose().array();
    }
    grad = std::move(dx);
  }
  g.dinput = std::move(grad);
  return g;
}

/// Forward-mode directional derivative of the outputs along a parameter
/// direction (plain layers only; noisy layers must be evaluated at their
/// means).  dir_w/dir_b hold the direction for each layer; the tape must
/// come from a noiseless forward pass on the same inputs.
inline Matrix jvp(const DenseNet& net, const Tape& tape,
                  const std::vector<Matrix>& dir_w,
                  const std::vector<Vector>& dir_b) {
  const auto n = net.layers().size();
  require(tape.inputs.size() == n && !tape.has_noise,
          "jvp: needs a noiseless tape for this network");
  require(dir_w.size() == n && dir_b.size() == n, "jvp: direction mismatch");
  Matrix t = Matrix::Zero(tape.inputs[0].rows(), net.input_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const Affine& layer = net.layers()[i];
    Matrix dz = t * layer.w.transpose() + tape.inputs[i] * dir_w[i].transpose();
    dz.rowwise() += dir_b[i].transpose();
    activation_backward(layer.act, tape.preacts[i], dz);
    t = std::move(dz);
  }
  return t;
}

// --------------------------- parameter plumbing ---------------------------

/// Number of mean parameters (weights + biases) in an affine chain.  Noise
/// scale parameters mirror these shapes and are not counted separately.
inline std::size_t count_params(const std::vector<int>& layer_sizes) {
  require(layer_sizes.size() >= 2, "count_params: need input and output sizes");
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    require(layer_sizes[i] > 0 && layer_sizes[i + 1] > 0,
            "count_params: sizes must be positive");
    total += static_cast<std::size_t>(layer_sizes[i]) *
                 static_cast<std::size_t>(layer_sizes[i + 1]) +
             static_cast<std::size_t>(layer_sizes[i + 1]);
  }
  return total;
}

inline std::size_t count_params(const DenseNet& net) {
  std::size_t total = 0;
  for (const auto& l : net.layers())
    total += static_cast<std::size_t>(l.w.size()) +
             static_cast<std::size_t>(l.b.size());
  return total;
}

inline std::size_t param_vector_size(const DenseNet& net) {
  std::size_t total = 0;
  for (const auto& l : net.layers()) {
    total += static_cast<std::size_t>(l.w.size() + l.b.size());
    if (l.noisy)
      total += static_cast<std::size_t>(l.w_sigma.size() + l.b_sigma.size());
  }
  return total;
}

/// Flattens all trainable parameters (w, b, then noise scales per layer)
/// into one vector.  Order is fixed and shared with set_params / gradients.
inline Vector param_vector(const DenseNet& net) {
  Vector out(static_cast<Eigen::Index>(param_vector_size(net)));
  Eigen::Index at = 0;
  auto put = [&](const double* data, Eigen::Index count) {
    out.segment(at, count) = Eigen::Map<const Vector>(data, count);
    at += count;
  };
  for (const auto& l : net.layers()) {
    put(l.w.data(), l.w.size());
    put(l.b.data(), l.b.size());
    if (l.noisy) {
      put(l.w_sigma.data(), l.w_sigma.size());
      put(l.b_sigma.data(), l.b_sigma.size());
    }
  }
  return out;
}

inline void set_params(DenseNet& net, const Vector& flat) {
  require(flat.size() == static_cast<Eigen::Index>(param_vector_size(net)),
          "set_params: size mismatch");
  Eigen::Index at = 0;
  auto take = [&](double* data, Eigen::Index count) {
    Eigen::Map<Vector>(data, count) = flat.segment(at, count);
    at += count;
  };
  for (auto& l : net.layers()) {
    take(l.w.data(), l.w.size());
    take(l.b.data(), l.b.size());
    if (l.noisy) {
      take(l.w_sigma.data(), l.w_sigma.size());
      take(l.b_sigma.data(), l.b_sigma.size());
    }
  }
}

/// Splits a flat direction vector into per-layer weight/bias blocks
/// (plain networks only), e.g. for directional derivatives.
inline void unflatten_direction(const DenseNet& net, const Vector& flat,
                                std::vector<Matrix>& dir_w,
                                std::vector<Vector>& dir_b) {
  require(!net.has_noisy_layers(),
          "unflatten_direction: defined for plain networks");
  require(flat.size() == static_cast<Eigen::Index>(param_vector_size(net)),
          "unflatten_direction: size mismatch");
  const auto n = net.layers().size();
  dir_w.resize(n);
  dir_b.resize(n);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Affine& l = net.layers()[i];
    dir_w[i] = Eigen::Map<const Matrix>(flat.data() + at, l.w.rows(), l.w.cols());
    at += l.w.size();
    dir_b[i] = flat.segment(at, l.b.size());
    at += l.b.size();
  }
}

inline Vector grad_vector(const DenseNet& net, const Gradients& g) {
  Vector out(static_cast<Eigen::Index>(param_vector_size(net)));
  Eigen::Index at = 0;
  auto put = [&](const double* data, Eigen::Index count) {
    out.segment(at, count) = Eigen::Map<const Vector>(data, count);
    at += count;
  };
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    put(g.dw[i].data(), g.dw[i].size());
    put(g.db[i].data(), g.db[i].size());
    if (net.layers()[i].noisy) {
      put(g.dw_sigma[i].data(), g.dw_sigma[i].size());
      put(g.db_sigma[i].data(), g.db_sigma[i].size());
    }
  }
  return out;
}

}  // namespace vholab
