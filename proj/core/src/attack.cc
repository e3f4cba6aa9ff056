// core/src/attack.cc

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

#include "mtlaug/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtlaug/corpus.h"
#include "mtlaug/error.h"

namespace mtlaug {

using ad::Tensor;

const char *AttackKindName(AttackKind k) { return k == AttackKind::kFgsm ? "fgsm" : "bim"; }

AttackKind ParseAttackKind(const std::string &s) {
  if (s == "fgsm") return AttackKind::kFgsm;
  if (s == "bim") return AttackKind::kBim;
  throw ValidationError("unknown attack '" + s + "'");
}

void AttackParams::Validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw ValidationError("attack epsilon must be >= 0");
  if (kind == AttackKind::kBim && steps < 1) throw ValidationError("BIM needs at least one step");
  if (step_size < 0.0) throw ValidationError("attack step size must be >= 0");
}

double AttackParams::EffectiveStepSize() const {
  if (kind == AttackKind::kFgsm) return epsilon;
  return step_size > 0.0 ? step_size : epsilon / steps;
}

std::vector<std::vector<float>> InputGradient(const Model &model,
                                              const std::vector<const LogMelSpectrogram *> &specs,
                                              const std::vector<int> &labels) {
  if (specs.size() != labels.size()) throw ShapeError("attack: specs and labels differ in length");
  if (specs.empty()) return {};
  const auto k = static_cast<std::size_t>(model.config().n_classes);
  auto x0 = model.Input(specs);
  auto x = Tensor<float>::Parameter(x0.shape(), std::vector<float>(x0.data().begin(), x0.data().end()));
  std::vector<float> targets(labels.size() * k, 0.0f);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
      throw ValidationError("attack: label out of range");
    targets[i * k + static_cast<std::size_t>(labels[i])] = 1.0f;
  }
  auto loss = ad::SoftmaxCrossEntropy<float>(model.EmotionLogits(x), targets);
  loss.Backward();
  const std::size_t cells = x0.numel() / specs.size();
  std::vector<std::vector<float>> out(specs.size());
  auto g = x.grad();
  // The loss is a batch mean; rescaling does not change the sign.
  for (std::size_t i = 0; i < specs.size(); ++i)
    out[i].assign(g.begin() + static_cast<std::ptrdiff_t>(i * cells),
                  g.begin() + static_cast<std::ptrdiff_t>((i + 1) * cells));
  const_cast<Model &>(model).params().ZeroGrad();
  return out;
}

namespace {

float Sign(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

// x + e rounded to float, pulled back inside the ball if rounding left it.
float BallEdge(float x, double e) {
  float edge = static_cast<float>(static_cast<double>(x) + e);
  const float inward = e > 0 ? -std::numeric_limits<float>::infinity()
                             : std::numeric_limits<float>::infinity();
  while (std::abs(static_cast<double>(edge) - x) > std::abs(e)) edge = std::nextafter(edge, inward);
  return edge;
}

}  // namespace

std::vector<LogMelSpectrogram> Fgsm(const Model &model,
                                    const std::vector<const LogMelSpectrogram *> &specs,
                                    const std::vector<int> &labels, double epsilon) {
  return Bim(model, specs, labels, epsilon, 1, epsilon);
}

std::vector<LogMelSpectrogram> Bim(const Model &model,
                                   const std::vector<const LogMelSpectrogram *> &specs,
                                   const std::vector<int> &labels, double epsilon, int steps,
                                   double step_size) {
  if (!(epsilon >= 0.0)) throw ValidationError("attack epsilon must be >= 0");
  if (steps < 1) throw ValidationError("BIM needs at least one step");
  std::vector<LogMelSpectrogram> adv;
  adv.reserve(specs.size());
  for (const auto *s : specs) adv.push_back(*s);
  if (epsilon == 0.0) return adv;
  const float alpha = static_cast<float>(step_size);
  for (int it = 0; it < steps; ++it) {
    std::vector<const LogMelSpectrogram *> ptrs;
    for (const auto &a : adv) ptrs.push_back(&a);
    auto grads = InputGradient(model, ptrs, labels);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      auto &d = adv[i].data;
      const auto &x0 = specs[i]->data;
      for (std::size_t c = 0; c < d.size(); ++c) {
        const float stepped = d[c] + alpha * Sign(grads[i][c]);
        d[c] = std::clamp(stepped, BallEdge(x0[c], -epsilon), BallEdge(x0[c], epsilon));
      }
    }
  }
  return adv;
}

std::vector<LogMelSpectrogram> Attack(const Model &model,
                                      const std::vector<const LogMelSpectrogram *> &specs,
                                      const std::vector<int> &labels, const AttackParams &params) {
  params.Validate();
  if (params.kind == AttackKind::kFgsm) return Fgsm(model, specs, labels, params.epsilon);
  return Bim(model, specs, labels, params.epsilon, params.steps, params.EffectiveStepSize());
}

double LinfDistance(const LogMelSpectrogram &a, const LogMelSpectrogram &b) {
  if (!a.SameShape(b)) throw ShapeError("linf: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
  return m;
}

}  // namespace mtlaug
