// core/include/mtlaug/ad/ops.h

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

#ifndef MTLAUG_AD_OPS_H_
#define MTLAUG_AD_OPS_H_

#include <span>
#include <vector>

#include "mtlaug/ad/tensor.h"

namespace mtlaug {
class Rng;
}

namespace mtlaug::ad {

// Shape errors name the op. All ops are defined for Real in {float, double}.

template <typename Real>
Tensor<Real> Reshape(const Tensor<Real> &x, Shape shape);

/// [m,k] x [k,n] -> [m,n].
template <typename Real>
Tensor<Real> MatMul(const Tensor<Real> &a, const Tensor<Real> &b);
/// [B,m,k] x [B,k,n] -> [B,m,n].
template <typename Real>
Tensor<Real> BatchMatMul(const Tensor<Real> &a, const Tensor<Real> &b);

/// x [B,Ci,H,W], w [Co,Ci,kh,kw] -> [B,Co,Ho,Wo], Ho = (H + 2p - kh)/s + 1.
template <typename Real>
Tensor<Real> Conv2d(const Tensor<Real> &x, const Tensor<Real> &w, int stride, int padding);
/// Adjoint of Conv2d in x. x [B,Ci,H,W], w [Ci,Co,kh,kw] ->
/// [B,Co,(H-1)s - 2p + kh + op, ...]; output_padding is per spatial axis.
template <typename Real>
Tensor<Real> Conv2dTranspose(const Tensor<Real> &x, const Tensor<Real> &w, int stride,
                             int padding, int output_padding_h, int output_padding_w);

/// Adds b (length x.dim(axis)) along `axis`.
template <typename Real>
Tensor<Real> BiasAdd(const Tensor<Real> &x, const Tensor<Real> &b, std::size_t axis);

template <typename Real> Tensor<Real> Relu(const Tensor<Real> &x);
template <typename Real> Tensor<Real> Sigmoid(const Tensor<Real> &x);
template <typename Real> Tensor<Real> Tanh(const Tensor<Real> &x);
/// Softmax over the last axis, max-subtracted.
template <typename Real> Tensor<Real> Softmax(const Tensor<Real> &x);

template <typename Real> Tensor<Real> Add(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> Sub(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> Mul(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> Scale(const Tensor<Real> &x, Real s);

template <typename Real>
Tensor<Real> Concat(const std::vector<Tensor<Real>> &xs, std::size_t axis);
template <typename Real>
Tensor<Real> Slice(const Tensor<Real> &x, std::size_t axis, std::size_t start,
                   std::size_t length);
/// Rows of a 2-d tensor, in the given order.
template <typename Real>
Tensor<Real> SelectRows(const Tensor<Real> &x, std::span<const std::size_t> rows);

template <typename Real> Tensor<Real> Sum(const Tensor<Real> &x);
template <typename Real> Tensor<Real> Mean(const Tensor<Real> &x);
/// Mean over one axis; that axis is removed.
template <typename Real> Tensor<Real> MeanAxis(const Tensor<Real> &x, std::size_t axis);

/// Inverted dropout. Identity when !train or p == 0. Throws ValidationError
/// unless 0 <= p < 1.
template <typename Real>
Tensor<Real> Dropout(const Tensor<Real> &x, double p, bool train, Rng &rng);

/// [B,C,H,W] -> [B,W,C*H]: width becomes time, channels x height the feature.
template <typename Real> Tensor<Real> ToSequence(const Tensor<Real> &x);
/// Inverse of ToSequence.
template <typename Real>
Tensor<Real> FromSequence(const Tensor<Real> &x, std::size_t channels, std::size_t height);

/// (x - mean[h]) * inv_std[h] for x [B,C,H,W]; statistics are constants.
template <typename Real>
Tensor<Real> NormalizeRows(const Tensor<Real> &x, std::span<const Real> mean,
                           std::span<const Real> inv_std);

/// Single-direction LSTM. x [B,T,D], wx [D,4H], wh [H,4H], b [4H] with gate
/// blocks ordered (input, forget, cell, output). Returns hidden states
/// [B,T,H]; with `reverse` the recurrence runs from t = T-1 down to 0.
template <typename Real>
Tensor<Real> Lstm(const Tensor<Real> &x, const Tensor<Real> &wx, const Tensor<Real> &wh,
                  const Tensor<Real> &b, bool reverse);

/// Mean over rows of -sum_k targets * log softmax(logits). Targets [n,k] are
/// constants whose rows must sum to 1 within 1e-5.
template <typename Real>
Tensor<Real> SoftmaxCrossEntropy(const Tensor<Real> &logits, std::span<const Real> targets);

enum class Reduction { kMean, kSum };

/// Squared error between equal-shaped tensors, mean or sum over cells.
template <typename Real>
Tensor<Real> SquaredError(const Tensor<Real> &x, const Tensor<Real> &y,
                          Reduction reduction = Reduction::kMean);

template <typename Real>
struct CenterLossResult {
  Tensor<Real> loss;
  /// k x d moving-average updates, to be added to the centres after the
  /// optimizer step.
  std::vector<Real> center_deltas;
};

/// (1/n) sum_i ||f_i - c_{y_i}||^2 with constant centres [k,d]; the update
/// is delta_j = alpha * sum_{y_i=j} (f_i - c_j) / (1 + n_j).
template <typename Real>
CenterLossResult<Real> CenterLoss(const Tensor<Real> &features, std::span<const int> labels,
                                  std::span<const Real> centers, std::size_t num_classes,
                                  double alpha);

}  // namespace mtlaug::ad

#endif  // MTLAUG_AD_OPS_H_
