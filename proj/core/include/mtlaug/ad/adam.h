// core/include/mtlaug/ad/adam.h

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

#ifndef MTLAUG_AD_ADAM_H_
#define MTLAUG_AD_ADAM_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mtlaug/ad/parameters.h"

namespace mtlaug::ad {

struct AdamMoments {
  std::vector<float> m;
  std::vector<float> v;
  /// Updates applied to this parameter. Kept per parameter because groups
  /// may sit out a step.
  std::int64_t step = 0;
  bool operator==(const AdamMoments &) const = default;
};

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Total calls to Step.
  std::int64_t step = 0;
  std::map<std::string, AdamMoments> moments;
  bool operator==(const AdamState &) const = default;
};

class Adam {
 public:
  explicit Adam(double lr = 1e-4);
  explicit Adam(AdamState state) : state_(std::move(state)) {}

  /// Bias-corrected update of every parameter whose group is in `groups`
  /// (all groups if empty). Throws UsageError if one of them has no gradient.
  void Step(ParameterStore<float> &params, const std::set<std::string> &groups = {});

  double lr() const { return state_.lr; }
  void set_lr(double lr);
  const AdamState &state() const { return state_; }
  AdamState &mutable_state() { return state_; }

 private:
  AdamState state_;
};

}  // namespace mtlaug::ad

#endif  // MTLAUG_AD_ADAM_H_
