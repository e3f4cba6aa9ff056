// core/src/ad/ops.cc

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

#include "mtlaug/ad/ops.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ad/kernels.h"
#include "mtlaug/error.h"
#include "mtlaug/rng.h"

namespace mtlaug::ad {

using internal::MakeResult;

namespace {

template <typename Real>
void RequireRank(const Tensor<Real> &x, std::size_t rank, const char *op) {
  if (x.rank() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + ShapeString(x.shape()));
}

template <typename Real>
void RequireSameShape(const Tensor<Real> &a, const Tensor<Real> &b, const char *op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + ShapeString(a.shape()) + " vs " +
                     ShapeString(b.shape()));
}

std::size_t Prod(const Shape &s, std::size_t begin, std::size_t end) {
  std::size_t p = 1;
  for (std::size_t i = begin; i < end; ++i) p *= s[i];
  return p;
}

template <typename Real>
Real SigmoidScalar(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

// Applies f elementwise; dfdy(y, x) gives the local derivative.
template <typename Real, typename F, typename D>
Tensor<Real> Unary(const char *op, const Tensor<Real> &x, F f, D deriv) {
  std::vector<Real> y(x.numel());
  auto xs = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xs[i]);
  auto out = MakeResult<Real>(op, x.shape(), std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [deriv](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t i = 0; i < self.value.size(); ++i)
        g[i] += self.grad[i] * deriv(self.value[i], p.value[i]);
    };
  }
  return out;
}

}  // namespace

template <typename Real>
Tensor<Real> Reshape(const Tensor<Real> &x, Shape shape) {
  if (NumElements(shape) != x.numel())
    throw ShapeError("reshape: cannot view " + ShapeString(x.shape()) + " as " +
                     ShapeString(shape));
  std::vector<Real> v(x.data().begin(), x.data().end());
  auto out = MakeResult<Real>("reshape", std::move(shape), std::move(v), {x});
  if (out.requires_grad()) {
    out.node().backward = [](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> MatMul(const Tensor<Real> &a, const Tensor<Real> &b) {
  RequireRank(a, 2, "matmul");
  RequireRank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner dimensions differ " + ShapeString(a.shape()) + " x " +
                     ShapeString(b.shape()));
  std::vector<Real> c(m * n, Real(0));
  kernels::GemmNN(m, n, k, a.data().data(), b.data().data(), c.data());
  auto out = MakeResult<Real>("matmul", {m, n}, std::move(c), {a, b});
  if (out.requires_grad()) {
    out.node().backward = [m, k, n](Node<Real> &self) {
      Node<Real> &pa = *self.parents[0];
      Node<Real> &pb = *self.parents[1];
      if (pa.requires_grad)
        kernels::GemmNT(m, k, n, self.grad.data(), pb.value.data(), pa.EnsureGrad());
      if (pb.requires_grad)
        kernels::GemmTN(k, n, m, pa.value.data(), self.grad.data(), pb.EnsureGrad());
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> BatchMatMul(const Tensor<Real> &a, const Tensor<Real> &b) {
  RequireRank(a, 3, "batch_matmul");
  RequireRank(b, 3, "batch_matmul");
  const std::size_t B = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  if (b.dim(0) != B || b.dim(1) != k)
    throw ShapeError("batch_matmul: incompatible " + ShapeString(a.shape()) + " x " +
                     ShapeString(b.shape()));
  std::vector<Real> c(B * m * n, Real(0));
  for (std::size_t i = 0; i < B; ++i)
    kernels::GemmNN(m, n, k, a.data().data() + i * m * k, b.data().data() + i * k * n,
                    c.data() + i * m * n);
  auto out = MakeResult<Real>("batch_matmul", {B, m, n}, std::move(c), {a, b});
  if (out.requires_grad()) {
    out.node().backward = [B, m, k, n](Node<Real> &self) {
      Node<Real> &pa = *self.parents[0];
      Node<Real> &pb = *self.parents[1];
      for (std::size_t i = 0; i < B; ++i) {
        const Real *g = self.grad.data() + i * m * n;
        if (pa.requires_grad)
          kernels::GemmNT(m, k, n, g, pb.value.data() + i * k * n, pa.EnsureGrad() + i * m * k);
        if (pb.requires_grad)
          kernels::GemmTN(k, n, m, pa.value.data() + i * m * k, g, pb.EnsureGrad() + i * k * n);
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Conv2d(const Tensor<Real> &x, const Tensor<Real> &w, int stride, int padding) {
  RequireRank(x, 4, "conv2d");
  RequireRank(w, 4, "conv2d");
  if (stride < 1 || padding < 0) throw ShapeError("conv2d: bad stride/padding");
  const std::size_t B = x.dim(0), ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != ci)
    throw ShapeError("conv2d: kernel " + ShapeString(w.shape()) + " does not match input " +
                     ShapeString(x.shape()));
  const auto s = static_cast<std::size_t>(stride), p = static_cast<std::size_t>(padding);
  if (H + 2 * p < kh || W + 2 * p < kw) throw ShapeError("conv2d: kernel larger than input");
  kernels::ConvGeometry g{ci, H, W, kh, kw, s, p, (H + 2 * p - kh) / s + 1, (W + 2 * p - kw) / s + 1};
  const std::size_t K = g.rows(), P = g.cols();
  std::vector<Real> y(B * co * P, Real(0));
  std::vector<Real> col(K * P);
  for (std::size_t b = 0; b < B; ++b) {
    kernels::Im2Col(g, x.data().data() + b * ci * H * W, col.data());
    kernels::GemmNN(co, P, K, w.data().data(), col.data(), y.data() + b * co * P);
  }
  auto out = MakeResult<Real>("conv2d", {B, co, g.out_h, g.out_w}, std::move(y), {x, w});
  if (out.requires_grad()) {
    out.node().backward = [g, B, co](Node<Real> &self) {
      Node<Real> &px = *self.parents[0];
      Node<Real> &pw = *self.parents[1];
      const std::size_t K = g.rows(), P = g.cols(), in_sz = g.channels * g.height * g.width;
      std::vector<Real> col(K * P);
      std::vector<Real> dcol(K * P);
      for (std::size_t b = 0; b < B; ++b) {
        const Real *dy = self.grad.data() + b * co * P;
        if (pw.requires_grad) {
          kernels::Im2Col(g, px.value.data() + b * in_sz, col.data());
          kernels::GemmNT(co, K, P, dy, col.data(), pw.EnsureGrad());
        }
        if (px.requires_grad) {
          std::fill(dcol.begin(), dcol.end(), Real(0));
          kernels::GemmTN(K, P, co, pw.value.data(), dy, dcol.data());
          kernels::Col2Im(g, dcol.data(), px.EnsureGrad() + b * in_sz);
        }
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Conv2dTranspose(const Tensor<Real> &x, const Tensor<Real> &w, int stride,
                             int padding, int output_padding_h, int output_padding_w) {
  RequireRank(x, 4, "conv2d_transpose");
  RequireRank(w, 4, "conv2d_transpose");
  if (stride < 1 || padding < 0 || output_padding_h < 0 || output_padding_w < 0 ||
      output_padding_h >= stride || output_padding_w >= stride)
    throw ShapeError("conv2d_transpose: bad stride/padding/output_padding");
  const std::size_t B = x.dim(0), ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t co = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(0) != ci)
    throw ShapeError("conv2d_transpose: kernel " + ShapeString(w.shape()) +
                     " does not match input " + ShapeString(x.shape()));
  const auto s = static_cast<long>(stride), p = static_cast<long>(padding);
  const long ho = (static_cast<long>(H) - 1) * s - 2 * p + static_cast<long>(kh) + output_padding_h;
  const long wo = (static_cast<long>(W) - 1) * s - 2 * p + static_cast<long>(kw) + output_padding_w;
  if (ho < 1 || wo < 1) throw ShapeError("conv2d_transpose: empty output");
  // Geometry of the forward conv that maps the output back onto x.
  kernels::ConvGeometry g{co, static_cast<std::size_t>(ho), static_cast<std::size_t>(wo), kh, kw,
                          static_cast<std::size_t>(s), static_cast<std::size_t>(p), H, W};
  const std::size_t K = g.rows(), P = g.cols(), out_sz = co * g.height * g.width;
  std::vector<Real> y(B * out_sz, Real(0));
  std::vector<Real> col(K * P);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(col.begin(), col.end(), Real(0));
    kernels::GemmTN(K, P, ci, w.data().data(), x.data().data() + b * ci * P, col.data());
    kernels::Col2Im(g, col.data(), y.data() + b * out_sz);
  }
  auto out = MakeResult<Real>("conv2d_transpose", {B, co, g.height, g.width}, std::move(y), {x, w});
  if (out.requires_grad()) {
    out.node().backward = [g, B, ci](Node<Real> &self) {
      Node<Real> &px = *self.parents[0];
      Node<Real> &pw = *self.parents[1];
      const std::size_t K = g.rows(), P = g.cols(), out_sz = g.channels * g.height * g.width;
      std::vector<Real> dcol(K * P);
      for (std::size_t b = 0; b < B; ++b) {
        kernels::Im2Col(g, self.grad.data() + b * out_sz, dcol.data());
        if (px.requires_grad)
          kernels::GemmNN(ci, P, K, pw.value.data(), dcol.data(), px.EnsureGrad() + b * ci * P);
        if (pw.requires_grad)
          kernels::GemmNT(ci, K, P, px.value.data() + b * ci * P, dcol.data(), pw.EnsureGrad());
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> BiasAdd(const Tensor<Real> &x, const Tensor<Real> &b, std::size_t axis) {
  if (axis >= x.rank() || b.rank() != 1 || b.dim(0) != x.dim(axis))
    throw ShapeError("bias_add: bias " + ShapeString(b.shape()) + " does not fit axis " +
                     std::to_string(axis) + " of " + ShapeString(x.shape()));
  const std::size_t outer = Prod(x.shape(), 0, axis), n = x.dim(axis),
                    inner = Prod(x.shape(), axis + 1, x.rank());
  std::vector<Real> y(x.data().begin(), x.data().end());
  auto bv = b.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j) {
      Real *row = y.data() + (o * n + j) * inner;
      for (std::size_t i = 0; i < inner; ++i) row[i] += bv[j];
    }
  auto out = MakeResult<Real>("bias_add", x.shape(), std::move(y), {x, b});
  if (out.requires_grad()) {
    out.node().backward = [outer, n, inner](Node<Real> &self) {
      Node<Real> &px = *self.parents[0];
      Node<Real> &pb = *self.parents[1];
      if (px.requires_grad) {
        Real *g = px.EnsureGrad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
      if (pb.requires_grad) {
        Real *g = pb.EnsureGrad();
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t j = 0; j < n; ++j) {
            const Real *row = self.grad.data() + (o * n + j) * inner;
            Real acc = Real(0);
            for (std::size_t i = 0; i < inner; ++i) acc += row[i];
            g[j] += acc;
          }
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Relu(const Tensor<Real> &x) {
  return Unary<Real>(
      "relu", x, [](Real v) { return v > Real(0) ? v : Real(0); },
      [](Real, Real in) { return in > Real(0) ? Real(1) : Real(0); });
}

template <typename Real>
Tensor<Real> Sigmoid(const Tensor<Real> &x) {
  return Unary<Real>(
      "sigmoid", x, [](Real v) { return SigmoidScalar(v); },
      [](Real y, Real) { return y * (Real(1) - y); });
}

template <typename Real>
Tensor<Real> Tanh(const Tensor<Real> &x) {
  return Unary<Real>(
      "tanh", x, [](Real v) { return std::tanh(v); },
      [](Real y, Real) { return Real(1) - y * y; });
}

template <typename Real>
Tensor<Real> Softmax(const Tensor<Real> &x) {
  if (x.rank() < 1) throw ShapeError("softmax: scalar input");
  const std::size_t k = x.shape().back();
  const std::size_t rows = x.numel() / k;
  std::vector<Real> y(x.numel());
  auto xs = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *in = xs.data() + r * k;
    Real *o = y.data() + r * k;
    const Real mx = *std::max_element(in, in + k);
    Real sum = Real(0);
    for (std::size_t j = 0; j < k; ++j) sum += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < k; ++j) o[j] /= sum;
  }
  auto out = MakeResult<Real>("softmax", x.shape(), std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [rows, k](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t r = 0; r < rows; ++r) {
        const Real *yv = self.value.data() + r * k;
        const Real *dy = self.grad.data() + r * k;
        Real dot = Real(0);
        for (std::size_t j = 0; j < k; ++j) dot += dy[j] * yv[j];
        for (std::size_t j = 0; j < k; ++j) g[r * k + j] += yv[j] * (dy[j] - dot);
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Add(const Tensor<Real> &a, const Tensor<Real> &b) {
  RequireSameShape(a, b, "add");
  std::vector<Real> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + b.data()[i];
  auto out = MakeResult<Real>("add", a.shape(), std::move(y), {a, b});
  if (out.requires_grad()) {
    out.node().backward = [](Node<Real> &self) {
      for (auto &pp : self.parents) {
        if (!pp->requires_grad) continue;
        Real *g = pp->EnsureGrad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Sub(const Tensor<Real> &a, const Tensor<Real> &b) {
  RequireSameShape(a, b, "sub");
  std::vector<Real> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] - b.data()[i];
  auto out = MakeResult<Real>("sub", a.shape(), std::move(y), {a, b});
  if (out.requires_grad()) {
    out.node().backward = [](Node<Real> &self) {
      Node<Real> &pa = *self.parents[0];
      Node<Real> &pb = *self.parents[1];
      if (pa.requires_grad) {
        Real *g = pa.EnsureGrad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
      if (pb.requires_grad) {
        Real *g = pb.EnsureGrad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Mul(const Tensor<Real> &a, const Tensor<Real> &b) {
  RequireSameShape(a, b, "mul");
  std::vector<Real> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * b.data()[i];
  auto out = MakeResult<Real>("mul", a.shape(), std::move(y), {a, b});
  if (out.requires_grad()) {
    out.node().backward = [](Node<Real> &self) {
      Node<Real> &pa = *self.parents[0];
      Node<Real> &pb = *self.parents[1];
      // Diamond case Mul(x, x): both branches accumulate into the same node.
      if (pa.requires_grad) {
        Real *g = pa.EnsureGrad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pb.value[i];
      }
      if (pb.requires_grad) {
        Real *g = pb.EnsureGrad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pa.value[i];
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Scale(const Tensor<Real> &x, Real s) {
  std::vector<Real> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.data()[i] * s;
  auto out = MakeResult<Real>("scale", x.shape(), std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [s](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * s;
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Concat(const std::vector<Tensor<Real>> &xs, std::size_t axis) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const Shape &ref = xs[0].shape();
  if (axis >= ref.size()) throw ShapeError("concat: axis out of range");
  Shape shape = ref;
  shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const auto &t : xs) {
    if (t.rank() != ref.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < ref.size(); ++d)
      if (d != axis && t.dim(d) != ref[d])
        throw ShapeError("concat: shape mismatch " + ShapeString(t.shape()) + " vs " +
                         ShapeString(ref));
    shape[axis] += t.dim(axis);
    widths.push_back(t.dim(axis));
  }
  const std::size_t outer = Prod(ref, 0, axis), inner = Prod(ref, axis + 1, ref.size());
  const std::size_t total = shape[axis];
  std::vector<Real> y(NumElements(shape));
  std::size_t offset = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto src = xs[i].data();
    const std::size_t chunk = widths[i] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(src.data() + o * chunk, chunk, y.data() + (o * total + offset) * inner);
    offset += widths[i];
  }
  auto out = MakeResult<Real>("concat", std::move(shape), std::move(y), xs);
  if (out.requires_grad()) {
    out.node().backward = [widths, outer, inner, total](Node<Real> &self) {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        Node<Real> &p = *self.parents[i];
        const std::size_t chunk = widths[i] * inner;
        if (p.requires_grad) {
          Real *g = p.EnsureGrad();
          for (std::size_t o = 0; o < outer; ++o) {
            const Real *src = self.grad.data() + (o * total + offset) * inner;
            for (std::size_t j = 0; j < chunk; ++j) g[o * chunk + j] += src[j];
          }
        }
        offset += widths[i];
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Slice(const Tensor<Real> &x, std::size_t axis, std::size_t start,
                   std::size_t length) {
  if (axis >= x.rank() || start + length > x.dim(axis) || length == 0)
    throw ShapeError("slice: [" + std::to_string(start) + ", +" + std::to_string(length) +
                     ") out of range on axis " + std::to_string(axis) + " of " +
                     ShapeString(x.shape()));
  const std::size_t outer = Prod(x.shape(), 0, axis), inner = Prod(x.shape(), axis + 1, x.rank());
  const std::size_t full = x.dim(axis);
  Shape shape = x.shape();
  shape[axis] = length;
  std::vector<Real> y(outer * length * inner);
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(x.data().data() + (o * full + start) * inner, length * inner,
                y.data() + o * length * inner);
  auto out = MakeResult<Real>("slice", std::move(shape), std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [outer, inner, full, start, length](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t o = 0; o < outer; ++o) {
        Real *dst = g + (o * full + start) * inner;
        const Real *src = self.grad.data() + o * length * inner;
        for (std::size_t j = 0; j < length * inner; ++j) dst[j] += src[j];
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> SelectRows(const Tensor<Real> &x, std::span<const std::size_t> rows) {
  RequireRank(x, 2, "select_rows");
  const std::size_t d = x.dim(1);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  std::vector<Real> y(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= x.dim(0)) throw ShapeError("select_rows: row index out of range");
    std::copy_n(x.data().data() + idx[r] * d, d, y.data() + r * d);
  }
  auto out = MakeResult<Real>("select_rows", {idx.size(), d}, std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [idx, d](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < d; ++j) g[idx[r] * d + j] += self.grad[r * d + j];
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Sum(const Tensor<Real> &x) {
  Real acc = Real(0);
  for (Real v : x.data()) acc += v;
  auto out = MakeResult<Real>("sum", {}, {acc}, {x});
  if (out.requires_grad()) {
    out.node().backward = [](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t i = 0; i < p.value.size(); ++i) g[i] += self.grad[0];
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Mean(const Tensor<Real> &x) {
  if (x.numel() == 0) throw ShapeError("mean: empty tensor");
  return Scale(Sum(x), Real(1) / static_cast<Real>(x.numel()));
}

template <typename Real>
Tensor<Real> MeanAxis(const Tensor<Real> &x, std::size_t axis) {
  if (axis >= x.rank() || x.dim(axis) == 0) throw ShapeError("mean_axis: bad axis");
  const std::size_t outer = Prod(x.shape(), 0, axis), n = x.dim(axis),
                    inner = Prod(x.shape(), axis + 1, x.rank());
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<long>(axis));
  std::vector<Real> y(outer * inner, Real(0));
  const Real inv = Real(1) / static_cast<Real>(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < inner; ++i)
        y[o * inner + i] += x.data()[(o * n + j) * inner + i];
  for (Real &v : y) v *= inv;
  auto out = MakeResult<Real>("mean_axis", std::move(shape), std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [outer, n, inner, inv](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < inner; ++i)
            g[(o * n + j) * inner + i] += self.grad[o * inner + i] * inv;
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Dropout(const Tensor<Real> &x, double p, bool train, Rng &rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("dropout: p must lie in [0, 1)");
  if (!train || p == 0.0) return x;
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - p));
  std::vector<Real> mask(x.numel());
  std::vector<Real> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask[i] = rng.Uniform() < p ? Real(0) : keep_scale;
    y[i] = x.data()[i] * mask[i];
  }
  auto out = MakeResult<Real>("dropout", x.shape(), std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [mask = std::move(mask)](Node<Real> &self) {
      Node<Real> &pp = *self.parents[0];
      if (!pp.requires_grad) return;
      Real *g = pp.EnsureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * mask[i];
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> ToSequence(const Tensor<Real> &x) {
  RequireRank(x, 4, "to_sequence");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  std::vector<Real> y(x.numel());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
          y[(b * W + w) * C * H + c * H + h] = x.data()[((b * C + c) * H + h) * W + w];
  auto out = MakeResult<Real>("to_sequence", {B, W, C * H}, std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [B, C, H, W](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w)
              g[((b * C + c) * H + h) * W + w] += self.grad[(b * W + w) * C * H + c * H + h];
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> FromSequence(const Tensor<Real> &x, std::size_t channels, std::size_t height) {
  RequireRank(x, 3, "from_sequence");
  const std::size_t B = x.dim(0), W = x.dim(1), C = channels, H = height;
  if (x.dim(2) != C * H)
    throw ShapeError("from_sequence: feature width " + std::to_string(x.dim(2)) +
                     " != channels*height " + std::to_string(C * H));
  std::vector<Real> y(x.numel());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
          y[((b * C + c) * H + h) * W + w] = x.data()[(b * W + w) * C * H + c * H + h];
  auto out = MakeResult<Real>("from_sequence", {B, C, H, W}, std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [B, C, H, W](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w)
              g[(b * W + w) * C * H + c * H + h] += self.grad[((b * C + c) * H + h) * W + w];
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> NormalizeRows(const Tensor<Real> &x, std::span<const Real> mean,
                           std::span<const Real> inv_std) {
  RequireRank(x, 4, "normalize_rows");
  const std::size_t outer = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  if (mean.size() != H || inv_std.size() != H)
    throw ShapeError("normalize_rows: statistics length does not match height " +
                     std::to_string(H));
  std::vector<Real> scale(inv_std.begin(), inv_std.end());
  std::vector<Real> y(x.numel());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = (o * H + h) * W + w;
        y[i] = (x.data()[i] - mean[h]) * scale[h];
      }
  auto out = MakeResult<Real>("normalize_rows", x.shape(), std::move(y), {x});
  if (out.requires_grad()) {
    out.node().backward = [outer, H, W, scale = std::move(scale)](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t h = 0; h < H; ++h)
          for (std::size_t w = 0; w < W; ++w) {
            const std::size_t i = (o * H + h) * W + w;
            g[i] += self.grad[i] * scale[h];
          }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> Lstm(const Tensor<Real> &x, const Tensor<Real> &wx, const Tensor<Real> &wh,
                  const Tensor<Real> &b, bool reverse) {
  RequireRank(x, 3, "lstm");
  const std::size_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
  if (T == 0) throw ShapeError("lstm: empty sequence");
  if (wh.rank() != 2 || wh.dim(1) != 4 * wh.dim(0))
    throw ShapeError("lstm: recurrent weights must be [H,4H], got " + ShapeString(wh.shape()));
  const std::size_t H = wh.dim(0), G = 4 * H;
  if (wx.rank() != 2 || wx.dim(0) != D || wx.dim(1) != G)
    throw ShapeError("lstm: input weights " + ShapeString(wx.shape()) + " do not match input " +
                     ShapeString(x.shape()));
  if (b.rank() != 1 || b.dim(0) != G) throw ShapeError("lstm: bias must be [4H]");

  // Pre-activations for all steps: [B*T, 4H] = x W_x + b.
  std::vector<Real> gates(B * T * G, Real(0));
  kernels::GemmNN(B * T, G, D, x.data().data(), wx.data().data(), gates.data());
  for (std::size_t r = 0; r < B * T; ++r)
    for (std::size_t j = 0; j < G; ++j) gates[r * G + j] += b.data()[j];

  std::vector<Real> h(B * T * H), c(B * T * H), tanh_c(B * T * H);
  std::vector<Real> h_prev(B * H, Real(0)), c_prev(B * H, Real(0)), rec(B * G);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    std::fill(rec.begin(), rec.end(), Real(0));
    kernels::GemmNN(B, G, H, h_prev.data(), wh.data().data(), rec.data());
    for (std::size_t bi = 0; bi < B; ++bi) {
      Real *z = gates.data() + (bi * T + t) * G;
      for (std::size_t j = 0; j < H; ++j) {
        const Real ig = SigmoidScalar(z[j] + rec[bi * G + j]);
        const Real fg = SigmoidScalar(z[H + j] + rec[bi * G + H + j]);
        const Real gg = std::tanh(z[2 * H + j] + rec[bi * G + 2 * H + j]);
        const Real og = SigmoidScalar(z[3 * H + j] + rec[bi * G + 3 * H + j]);
        z[j] = ig;
        z[H + j] = fg;
        z[2 * H + j] = gg;
        z[3 * H + j] = og;
        const std::size_t k = (bi * T + t) * H + j;
        c[k] = fg * c_prev[bi * H + j] + ig * gg;
        tanh_c[k] = std::tanh(c[k]);
        h[k] = og * tanh_c[k];
        c_prev[bi * H + j] = c[k];
        h_prev[bi * H + j] = h[k];
      }
    }
  }

  std::vector<Real> out_values = h;
  auto out = MakeResult<Real>("lstm", {B, T, H}, std::move(out_values), {x, wx, wh, b});
  if (out.requires_grad()) {
    out.node().backward = [B, T, D, H, G, reverse, gates = std::move(gates), c = std::move(c),
                           tanh_c = std::move(tanh_c), h = std::move(h)](Node<Real> &self) {
      Node<Real> &px = *self.parents[0];
      Node<Real> &pwx = *self.parents[1];
      Node<Real> &pwh = *self.parents[2];
      Node<Real> &pb = *self.parents[3];
      std::vector<Real> dz(B * T * G, Real(0));
      std::vector<Real> dh_next(B * H, Real(0)), dc_next(B * H, Real(0));
      std::vector<Real> dz_step(B * G), h_prev(B * H);
      for (std::size_t step = T; step-- > 0;) {
        const std::size_t t = reverse ? T - 1 - step : step;
        const bool first = step == 0;
        const std::size_t t_prev = reverse ? t + 1 : t - 1;
        for (std::size_t bi = 0; bi < B; ++bi) {
          const Real *gv = gates.data() + (bi * T + t) * G;
          for (std::size_t j = 0; j < H; ++j) {
            const std::size_t k = (bi * T + t) * H + j;
            const Real ig = gv[j], fg = gv[H + j], gg = gv[2 * H + j], og = gv[3 * H + j];
            const Real cp = first ? Real(0) : c[(bi * T + t_prev) * H + j];
            const Real dh = self.grad[k] + dh_next[bi * H + j];
            const Real dog = dh * tanh_c[k];
            const Real dc = dh * og * (Real(1) - tanh_c[k] * tanh_c[k]) + dc_next[bi * H + j];
            Real *d = dz_step.data() + bi * G;
            d[j] = dc * gg * ig * (Real(1) - ig);
            d[H + j] = dc * cp * fg * (Real(1) - fg);
            d[2 * H + j] = dc * ig * (Real(1) - gg * gg);
            d[3 * H + j] = dog * og * (Real(1) - og);
            dc_next[bi * H + j] = dc * fg;
            h_prev[bi * H + j] = first ? Real(0) : h[(bi * T + t_prev) * H + j];
          }
          std::copy_n(dz_step.data() + bi * G, G, dz.data() + (bi * T + t) * G);
        }
        if (pwh.requires_grad && !first)
          kernels::GemmTN(H, G, B, h_prev.data(), dz_step.data(), pwh.EnsureGrad());
        std::fill(dh_next.begin(), dh_next.end(), Real(0));
        kernels::GemmNT(B, H, G, dz_step.data(), pwh.value.data(), dh_next.data());
      }
      if (pwx.requires_grad)
        kernels::GemmTN(D, G, B * T, px.value.data(), dz.data(), pwx.EnsureGrad());
      if (px.requires_grad)
        kernels::GemmNT(B * T, D, G, dz.data(), pwx.value.data(), px.EnsureGrad());
      if (pb.requires_grad) {
        Real *g = pb.EnsureGrad();
        for (std::size_t r = 0; r < B * T; ++r)
          for (std::size_t j = 0; j < G; ++j) g[j] += dz[r * G + j];
      }
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> SoftmaxCrossEntropy(const Tensor<Real> &logits, std::span<const Real> targets) {
  RequireRank(logits, 2, "softmax_cross_entropy");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (targets.size() != n * k)
    throw ShapeError("softmax_cross_entropy: targets size " + std::to_string(targets.size()) +
                     " != " + std::to_string(n * k));
  if (n == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (targets[r * k + j] < Real(0))
        throw ValidationError("softmax_cross_entropy: negative target");
      s += targets[r * k + j];
    }
    if (std::abs(s - 1.0) > 1e-5)
      throw ValidationError("softmax_cross_entropy: target row " + std::to_string(r) +
                            " sums to " + std::to_string(s));
  }
  std::vector<Real> probs(n * k);
  Real loss = Real(0);
  for (std::size_t r = 0; r < n; ++r) {
    const Real *z = logits.data().data() + r * k;
    const Real mx = *std::max_element(z, z + k);
    Real sum = Real(0);
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - mx);
    const Real log_sum = std::log(sum);
    for (std::size_t j = 0; j < k; ++j) {
      const Real logp = z[j] - mx - log_sum;
      probs[r * k + j] = std::exp(logp);
      if (targets[r * k + j] != Real(0)) loss -= targets[r * k + j] * logp;
    }
  }
  loss /= static_cast<Real>(n);
  std::vector<Real> tgt(targets.begin(), targets.end());
  auto out = MakeResult<Real>("softmax_cross_entropy", {}, {loss}, {logits});
  if (out.requires_grad()) {
    out.node().backward = [n, probs = std::move(probs), tgt = std::move(tgt)](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      const Real scale = self.grad[0] / static_cast<Real>(n);
      for (std::size_t i = 0; i < probs.size(); ++i) g[i] += scale * (probs[i] - tgt[i]);
    };
  }
  return out;
}

template <typename Real>
Tensor<Real> SquaredError(const Tensor<Real> &x, const Tensor<Real> &y, Reduction reduction) {
  RequireSameShape(x, y, "squared_error");
  if (x.numel() == 0) throw ShapeError("squared_error: empty tensors");
  const Real norm = reduction == Reduction::kMean ? Real(1) / static_cast<Real>(x.numel()) : Real(1);
  Real acc = Real(0);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const Real d = x.data()[i] - y.data()[i];
    acc += d * d;
  }
  auto out = MakeResult<Real>("squared_error", {}, {acc * norm}, {x, y});
  if (out.requires_grad()) {
    out.node().backward = [norm](Node<Real> &self) {
      Node<Real> &px = *self.parents[0];
      Node<Real> &py = *self.parents[1];
      const Real s = Real(2) * norm * self.grad[0];
      const bool gx = px.requires_grad, gy = py.requires_grad;
      Real *dx = gx ? px.EnsureGrad() : nullptr;
      Real *dy = gy ? py.EnsureGrad() : nullptr;
      for (std::size_t i = 0; i < px.value.size(); ++i) {
        const Real d = s * (px.value[i] - py.value[i]);
        if (gx) dx[i] += d;
        if (gy) dy[i] -= d;
      }
    };
  }
  return out;
}

template <typename Real>
CenterLossResult<Real> CenterLoss(const Tensor<Real> &features, std::span<const int> labels,
                                  std::span<const Real> centers, std::size_t num_classes,
                                  double alpha) {
  RequireRank(features, 2, "center_loss");
  const std::size_t n = features.dim(0), d = features.dim(1);
  if (labels.size() != n) throw ShapeError("center_loss: one label per row required");
  if (centers.size() != num_classes * d)
    throw ShapeError("center_loss: centres must be [k,d]");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw ValidationError("center_loss: label " + std::to_string(y) + " out of range");

  CenterLossResult<Real> result;
  result.center_deltas.assign(num_classes * d, Real(0));
  if (n == 0) {
    result.loss = Tensor<Real>::Scalar(Real(0));
    return result;
  }
  std::vector<Real> diff(n * d);
  Real acc = Real(0);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    ++counts[y];
    for (std::size_t j = 0; j < d; ++j) {
      const Real v = features.data()[i * d + j] - centers[y * d + j];
      diff[i * d + j] = v;
      acc += v * v;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < d; ++j) result.center_deltas[y * d + j] += diff[i * d + j];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    const Real scale = static_cast<Real>(alpha / (1.0 + static_cast<double>(counts[c])));
    for (std::size_t j = 0; j < d; ++j) result.center_deltas[c * d + j] *= scale;
  }
  const Real inv_n = Real(1) / static_cast<Real>(n);
  result.loss = MakeResult<Real>("center_loss", {}, {acc * inv_n}, {features});
  if (result.loss.requires_grad()) {
    result.loss.node().backward = [inv_n, diff = std::move(diff)](Node<Real> &self) {
      Node<Real> &p = *self.parents[0];
      if (!p.requires_grad) return;
      Real *g = p.EnsureGrad();
      const Real s = Real(2) * inv_n * self.grad[0];
      for (std::size_t i = 0; i < diff.size(); ++i) g[i] += s * diff[i];
    };
  }
  return result;
}

#define MTLAUG_INSTANTIATE_OPS(Real)                                                          \
  template Tensor<Real> Reshape(const Tensor<Real> &, Shape);                                 \
  template Tensor<Real> MatMul(const Tensor<Real> &, const Tensor<Real> &);                   \
  template Tensor<Real> BatchMatMul(const Tensor<Real> &, const Tensor<Real> &);              \
  template Tensor<Real> Conv2d(const Tensor<Real> &, const Tensor<Real> &, int, int);         \
  template Tensor<Real> Conv2dTranspose(const Tensor<Real> &, const Tensor<Real> &, int, int, \
                                        int, int);                                            \
  template Tensor<Real> BiasAdd(const Tensor<Real> &, const Tensor<Real> &, std::size_t);     \
  template Tensor<Real> Relu(const Tensor<Real> &);                                           \
  template Tensor<Real> Sigmoid(const Tensor<Real> &);                                        \
  template Tensor<Real> Tanh(const Tensor<Real> &);                                           \
  template Tensor<Real> Softmax(const Tensor<Real> &);                                        \
  template Tensor<Real> Add(const Tensor<Real> &, const Tensor<Real> &);                      \
  template Tensor<Real> Sub(const Tensor<Real> &, const Tensor<Real> &);                      \
  template Tensor<Real> Mul(const Tensor<Real> &, const Tensor<Real> &);                      \
  template Tensor<Real> Scale(const Tensor<Real> &, Real);                                    \
  template Tensor<Real> Concat(const std::vector<Tensor<Real>> &, std::size_t);               \
  template Tensor<Real> Slice(const Tensor<Real> &, std::size_t, std::size_t, std::size_t);   \
  template Tensor<Real> SelectRows(const Tensor<Real> &, std::span<const std::size_t>);       \
  template Tensor<Real> Sum(const Tensor<Real> &);                                            \
  template Tensor<Real> Mean(const Tensor<Real> &);                                           \
  template Tensor<Real> MeanAxis(const Tensor<Real> &, std::size_t);                          \
  template Tensor<Real> Dropout(const Tensor<Real> &, double, bool, Rng &);                   \
  template Tensor<Real> ToSequence(const Tensor<Real> &);                                     \
  template Tensor<Real> FromSequence(const Tensor<Real> &, std::size_t, std::size_t);         \
  template Tensor<Real> NormalizeRows(const Tensor<Real> &, std::span<const Real>,            \
                                      std::span<const Real>);                                 \
  template Tensor<Real> Lstm(const Tensor<Real> &, const Tensor<Real> &, const Tensor<Real> &, \
                             const Tensor<Real> &, bool);                                     \
  template Tensor<Real> SoftmaxCrossEntropy(const Tensor<Real> &, std::span<const Real>);     \
  template Tensor<Real> SquaredError(const Tensor<Real> &, const Tensor<Real> &, Reduction);  \
  template CenterLossResult<Real> CenterLoss(const Tensor<Real> &, std::span<const int>,      \
                                             std::span<const Real>, std::size_t, double);

MTLAUG_INSTANTIATE_OPS(float)
MTLAUG_INSTANTIATE_OPS(double)

#undef MTLAUG_INSTANTIATE_OPS

}  // namespace mtlaug::ad
