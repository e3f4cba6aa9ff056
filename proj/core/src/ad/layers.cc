// core/src/ad/layers.cc

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

#include "mtlaug/ad/layers.h"

namespace mtlaug::ad {

std::vector<double> RandomOrthogonal(std::size_t n, Rng &rng) {
  std::vector<double> q(n * n);
  for (auto &v : q) v = rng.Normal();
  // Rows are orthonormalised in order.
  for (std::size_t i = 0; i < n; ++i) {
    double *qi = q.data() + i * n;
    for (std::size_t j = 0; j < i; ++j) {
      const double *qj = q.data() + j * n;
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += qi[k] * qj[k];
      for (std::size_t k = 0; k < n; ++k) qi[k] -= dot * qj[k];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) norm += qi[k] * qi[k];
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      for (std::size_t k = 0; k < n; ++k) qi[k] = k == i ? 1.0 : 0.0;
    } else {
      for (std::size_t k = 0; k < n; ++k) qi[k] /= norm;
    }
  }
  return q;
}

}  // namespace mtlaug::ad
