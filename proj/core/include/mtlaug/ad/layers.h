// core/include/mtlaug/ad/layers.h

// Copyright 2026 The mtlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Composite layers built from the primitive ops. Each layer owns handles to
// its parameters, which live in a ParameterStore under "<prefix>.<name>".

#ifndef MTLAUG_AD_LAYERS_H_
#define MTLAUG_AD_LAYERS_H_

#include <cmath>
#include <string>
#include <vector>

#include "mtlaug/ad/ops.h"
#include "mtlaug/ad/parameters.h"
#include "mtlaug/rng.h"

namespace mtlaug::ad {

/// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename Real>
std::vector<Real> GlorotUniform(std::size_t n, std::size_t fan_in, std::size_t fan_out,
                                Rng &rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<Real> v(n);
  for (auto &x : v) x = static_cast<Real>(rng.Uniform(-a, a));
  return v;
}

/// Random n x n orthogonal matrix (modified Gram-Schmidt on a Gaussian draw).
std::vector<double> RandomOrthogonal(std::size_t n, Rng &rng);

template <typename Real>
class Dense {
 public:
  Dense() = default;
  Dense(ParameterStore<Real> &store, const std::string &prefix, const std::string &group,
        std::size_t in, std::size_t out, Rng &rng)
      : in_(in), out_(out) {
    w_ = store.Create(prefix + ".w", group, {in, out}, GlorotUniform<Real>(in * out, in, out, rng));
    b_ = store.Create(prefix + ".b", group, {out}, std::vector<Real>(out, Real(0)));
  }
  /// x [N,in] -> [N,out].
  Tensor<Real> operator()(const Tensor<Real> &x) const { return BiasAdd(MatMul(x, w_), b_, 1); }
  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor<Real> w_, b_;
};

struct ConvSpec {
  int kernel = 3;
  int channels = 8;
  int stride = 1;
  bool operator==(const ConvSpec &) const = default;
};

/// Output extent of a "same"-padded (padding = kernel/2) convolution.
inline std::size_t ConvOutExtent(std::size_t in, const ConvSpec &s) {
  const std::size_t p = static_cast<std::size_t>(s.kernel / 2);
  return (in + 2 * p - static_cast<std::size_t>(s.kernel)) / static_cast<std::size_t>(s.stride) + 1;
}

/// Stack of conv + bias + ReLU layers with padding kernel/2.
template <typename Real>
class ConvStack {
 public:
  ConvStack() = default;
  ConvStack(ParameterStore<Real> &store, const std::string &prefix, const std::string &group,
            std::size_t in_channels, std::vector<ConvSpec> specs, Rng &rng)
      : specs_(std::move(specs)) {
    std::size_t ci = in_channels;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto &s = specs_[i];
      const auto co = static_cast<std::size_t>(s.channels), k = static_cast<std::size_t>(s.kernel);
      const std::string p = prefix + ".conv" + std::to_string(i);
      w_.push_back(store.Create(p + ".w", group, {co, ci, k, k},
                                GlorotUniform<Real>(co * ci * k * k, ci * k * k, co * k * k, rng)));
      b_.push_back(store.Create(p + ".b", group, {co}, std::vector<Real>(co, Real(0))));
      ci = co;
    }
  }

  Tensor<Real> operator()(Tensor<Real> x) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
      x = Relu(BiasAdd(Conv2d(x, w_[i], specs_[i].stride, specs_[i].kernel / 2), b_[i], 1));
    return x;
  }
  const std::vector<ConvSpec> &specs() const { return specs_; }

 private:
  std::vector<ConvSpec> specs_;
  std::vector<Tensor<Real>> w_, b_;
};

/// Mirror of a ConvStack built from transposed convolutions. Output padding
/// is chosen per layer so every stage restores the exact extent the encoder
/// saw; the last layer is linear and emits `out_channels`.
template <typename Real>
class DeconvStack {
 public:
  DeconvStack() = default;
  DeconvStack(ParameterStore<Real> &store, const std::string &prefix, const std::string &group,
              std::size_t out_channels, const std::vector<ConvSpec> &encoder,
              std::size_t in_h, std::size_t in_w, Rng &rng) {
    // Extents seen by each encoder layer.
    std::vector<std::size_t> hs{in_h}, ws{in_w};
    for (const auto &s : encoder) {
      hs.push_back(ConvOutExtent(hs.back(), s));
      ws.push_back(ConvOutExtent(ws.back(), s));
    }
    for (std::size_t j = encoder.size(); j-- > 0;) {
      const auto &s = encoder[j];
      const auto ci = static_cast<std::size_t>(s.channels);
      const std::size_t co = j == 0 ? out_channels : static_cast<std::size_t>(encoder[j - 1].channels);
      const auto k = static_cast<std::size_t>(s.kernel), st = static_cast<std::size_t>(s.stride),
                 p = k / 2;
      Layer l;
      l.stride = s.stride;
      l.padding = s.kernel / 2;
      l.oph = static_cast<int>(hs[j] - ((hs[j + 1] - 1) * st + k - 2 * p));
      l.opw = static_cast<int>(ws[j] - ((ws[j + 1] - 1) * st + k - 2 * p));
      l.relu = j != 0;
      const std::string name = prefix + ".deconv" + std::to_string(encoder.size() - 1 - j);
      l.w = store.Create(name + ".w", group, {ci, co, k, k},
                         GlorotUniform<Real>(ci * co * k * k, ci * k * k, co * k * k, rng));
      l.b = store.Create(name + ".b", group, {co}, std::vector<Real>(co, Real(0)));
      layers_.push_back(std::move(l));
    }
  }

  Tensor<Real> operator()(Tensor<Real> z) const {
    for (const auto &l : layers_) {
      z = BiasAdd(Conv2dTranspose(z, l.w, l.stride, l.padding, l.oph, l.opw), l.b, 1);
      if (l.relu) z = Relu(z);
    }
    return z;
  }

 private:
  struct Layer {
    Tensor<Real> w, b;
    int stride = 1, padding = 0, oph = 0, opw = 0;
    bool relu = true;
  };
  std::vector<Layer> layers_;
};

template <typename Real>
struct BiLstmOutput {
  Tensor<Real> forward;   // [B,T,H]
  Tensor<Real> backward;  // [B,T,H]
  Tensor<Real> concat;    // [B,T,2H]
};

/// One bidirectional LSTM layer. Recurrent matrices are orthogonal per gate
/// block, biases zero except the forget gate (1.0).
template <typename Real>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParameterStore<Real> &store, const std::string &prefix, const std::string &group,
         std::size_t in, std::size_t units, Rng &rng)
      : units_(units) {
    for (int dir = 0; dir < 2; ++dir) {
      const std::string p = prefix + (dir == 0 ? ".fw" : ".bw");
      const std::size_t g = 4 * units;
      wx_[dir] = store.Create(p + ".wx", group, {in, g}, GlorotUniform<Real>(in * g, in, g, rng));
      std::vector<Real> wh(units * g);
      for (std::size_t blk = 0; blk < 4; ++blk) {
        auto q = RandomOrthogonal(units, rng);
        for (std::size_t r = 0; r < units; ++r)
          for (std::size_t c = 0; c < units; ++c)
            wh[r * g + blk * units + c] = static_cast<Real>(q[r * units + c]);
      }
      wh_[dir] = store.Create(p + ".wh", group, {units, g}, std::move(wh));
      std::vector<Real> b(g, Real(0));
      for (std::size_t j = 0; j < units; ++j) b[units + j] = Real(1);
      b_[dir] = store.Create(p + ".b", group, {g}, std::move(b));
    }
  }

  /// x [B,T,D].
  BiLstmOutput<Real> operator()(const Tensor<Real> &x) const {
    BiLstmOutput<Real> o;
    o.forward = Lstm(x, wx_[0], wh_[0], b_[0], false);
    o.backward = Lstm(x, wx_[1], wh_[1], b_[1], true);
    o.concat = Concat<Real>({o.forward, o.backward}, 2);
    return o;
  }

  /// Last forward state joined with the first backward state: [B,2H].
  static Tensor<Real> FinalStates(const BiLstmOutput<Real> &o) {
    const std::size_t B = o.forward.dim(0), T = o.forward.dim(1), H = o.forward.dim(2);
    auto f = Reshape(Slice(o.forward, 1, T - 1, 1), {B, H});
    auto b = Reshape(Slice(o.backward, 1, 0, 1), {B, H});
    return Concat<Real>({f, b}, 1);
  }

  std::size_t units() const { return units_; }

 private:
  std::size_t units_ = 0;
  Tensor<Real> wx_[2], wh_[2], b_[2];
};

template <typename Real>
struct PoolOutput {
  Tensor<Real> pooled;   // [B,d]
  Tensor<Real> weights;  // [B,T]
};

/// alpha = softmax_t(h_t . w); pooled = sum_t alpha_t h_t.
template <typename Real>
class AttentionPool {
 public:
  AttentionPool() = default;
  AttentionPool(ParameterStore<Real> &store, const std::string &prefix, const std::string &group,
                std::size_t d, Rng &rng) {
    w_ = store.Create(prefix + ".w", group, {d, 1}, GlorotUniform<Real>(d, d, 1, rng));
  }
  explicit AttentionPool(Tensor<Real> w) : w_(std::move(w)) {}

  PoolOutput<Real> operator()(const Tensor<Real> &h) const {
    const std::size_t B = h.dim(0), T = h.dim(1), d = h.dim(2);
    auto scores = Reshape(MatMul(Reshape(h, {B * T, d}), w_), {B, T});
    PoolOutput<Real> o;
    o.weights = Softmax(scores);
    o.pooled = Reshape(BatchMatMul(Reshape(o.weights, {B, 1, T}), h), {B, d});
    return o;
  }

 private:
  Tensor<Real> w_;
};

/// Uniform weights over time.
template <typename Real>
PoolOutput<Real> MeanPool(const Tensor<Real> &h) {
  const std::size_t B = h.dim(0), T = h.dim(1);
  PoolOutput<Real> o;
  o.pooled = MeanAxis(h, 1);
  o.weights = Tensor<Real>::Constant({B, T}, std::vector<Real>(B * T, Real(1) / static_cast<Real>(T)));
  return o;
}

}  // namespace mtlaug::ad

#endif  // MTLAUG_AD_LAYERS_H_
