// core/src/ad/kernels.h

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

// Row-major dense kernels. All of them accumulate into C; reduction order is
// fixed so results are bit-reproducible.

#ifndef MTLAUG_AD_KERNELS_H_
#define MTLAUG_AD_KERNELS_H_

#include <cstddef>

namespace mtlaug::ad::kernels {

/// C[M,N] += A[M,K] * B[K,N]
template <typename Real>
void GemmNN(std::size_t M, std::size_t N, std::size_t K, const Real *A, const Real *B, Real *C) {
  for (std::size_t i = 0; i < M; ++i) {
    Real *c = C + i * N;
    const Real *a = A + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      const Real av = a[k];
      if (av == Real(0)) continue;
      const Real *b = B + k * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

/// C[M,N] += A[M,K] * B[N,K]^T
template <typename Real>
void GemmNT(std::size_t M, std::size_t N, std::size_t K, const Real *A, const Real *B, Real *C) {
  for (std::size_t i = 0; i < M; ++i) {
    const Real *a = A + i * K;
    Real *c = C + i * N;
    for (std::size_t j = 0; j < N; ++j) {
      const Real *b = B + j * K;
      Real acc = Real(0);
      for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
      c[j] += acc;
    }
  }
}

/// C[M,N] += A[K,M]^T * B[K,N]
template <typename Real>
void GemmTN(std::size_t M, std::size_t N, std::size_t K, const Real *A, const Real *B, Real *C) {
  for (std::size_t k = 0; k < K; ++k) {
    const Real *a = A + k * M;
    const Real *b = B + k * N;
    for (std::size_t i = 0; i < M; ++i) {
      const Real av = a[i];
      if (av == Real(0)) continue;
      Real *c = C + i * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kh, kw;
  std::size_t stride, padding;
  std::size_t out_h, out_w;
  std::size_t rows() const { return channels * kh * kw; }
  std::size_t cols() const { return out_h * out_w; }
};

/// col[C*kh*kw, Ho*Wo] = patches of x[C,H,W] (zero outside).
template <typename Real>
void Im2Col(const ConvGeometry &g, const Real *x, Real *col) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        Real *row = col + ((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          Real *dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<long>(g.height)) {
            for (std::size_t ow = 0; ow < g.out_w; ++ow) dst[ow] = Real(0);
            continue;
          }
          const Real *src = x + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            dst[ow] = (iw < 0 || iw >= static_cast<long>(g.width)) ? Real(0)
                                                                    : src[static_cast<std::size_t>(iw)];
          }
        }
      }
    }
  }
}

/// x[C,H,W] += scatter of col (adjoint of Im2Col).
template <typename Real>
void Col2Im(const ConvGeometry &g, const Real *col, Real *x) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const Real *row = col + ((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          if (ih < 0 || ih >= static_cast<long>(g.height)) continue;
          Real *dst = x + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          const Real *src = row + oh * g.out_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            if (iw < 0 || iw >= static_cast<long>(g.width)) continue;
            dst[static_cast<std::size_t>(iw)] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace mtlaug::ad::kernels

#endif  // MTLAUG_AD_KERNELS_H_
