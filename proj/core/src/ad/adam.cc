// core/src/ad/adam.cc

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

#include "mtlaug/ad/adam.h"

#include <cmath>

#include "mtlaug/error.h"

namespace mtlaug::ad {

Adam::Adam(double lr) { set_lr(lr); }

void Adam::set_lr(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("adam: lr must be positive");
  state_.lr = lr;
}

void Adam::Step(ParameterStore<float> &params, const std::set<std::string> &groups) {
  for (const auto &e : params.entries()) {
    if (!groups.empty() && !groups.count(e.group)) continue;
    if (!e.tensor.has_grad()) throw UsageError("adam: parameter " + e.name + " has no gradient");
  }
  ++state_.step;
  const double b1 = state_.beta1, b2 = state_.beta2;
  for (auto &e : params.entries()) {
    if (!groups.empty() && !groups.count(e.group)) continue;
    auto &mom = state_.moments[e.name];
    const std::size_t n = e.tensor.numel();
    if (mom.m.size() != n) {
      mom.m.assign(n, 0.0f);
      mom.v.assign(n, 0.0f);
    }
    ++mom.step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(mom.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(mom.step));
    auto g = e.tensor.grad();
    auto p = e.tensor.mutable_data();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double m = b1 * mom.m[i] + (1.0 - b1) * gi;
      const double v = b2 * mom.v[i] + (1.0 - b2) * gi * gi;
      mom.m[i] = static_cast<float>(m);
      mom.v[i] = static_cast<float>(v);
      const double update = state_.lr * (m / c1) / (std::sqrt(v / c2) + state_.eps);
      p[i] = static_cast<float>(p[i] - update);
    }
  }
}

}  // namespace mtlaug::ad
