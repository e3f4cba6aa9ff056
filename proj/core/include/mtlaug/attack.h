// core/include/mtlaug/attack.h

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

#ifndef MTLAUG_ATTACK_H_
#define MTLAUG_ATTACK_H_

#include <string>
#include <vector>

#include "mtlaug/dsp.h"
#include "mtlaug/model.h"

namespace mtlaug {

enum class AttackKind { kFgsm, kBim };

const char *AttackKindName(AttackKind k);
AttackKind ParseAttackKind(const std::string &s);

struct AttackParams {
  AttackKind kind = AttackKind::kFgsm;
  double epsilon = 0.08;
  int steps = 10;
  /// Per-step size for BIM; 0 means epsilon / steps.
  double step_size = 0.0;
  void Validate() const;
  double EffectiveStepSize() const;
};

/// Gradient of the emotion cross-entropy with respect to the raw log-mel
/// input, one [M*T] vector per sample. Model parameter gradients are left
/// cleared.
std::vector<std::vector<float>> InputGradient(const Model &model,
                                              const std::vector<const LogMelSpectrogram *> &specs,
                                              const std::vector<int> &labels);

/// x + eps * sign(grad).
std::vector<LogMelSpectrogram> Fgsm(const Model &model,
                                    const std::vector<const LogMelSpectrogram *> &specs,
                                    const std::vector<int> &labels, double epsilon);

/// Iterated FGSM with per-step size `step_size`, clipped to the eps-ball
/// around the clean input after every step.
std::vector<LogMelSpectrogram> Bim(const Model &model,
                                   const std::vector<const LogMelSpectrogram *> &specs,
                                   const std::vector<int> &labels, double epsilon, int steps,
                                   double step_size);

std::vector<LogMelSpectrogram> Attack(const Model &model,
                                      const std::vector<const LogMelSpectrogram *> &specs,
                                      const std::vector<int> &labels, const AttackParams &params);

/// max |a - b| over cells.
double LinfDistance(const LogMelSpectrogram &a, const LogMelSpectrogram &b);

}  // namespace mtlaug

#endif  // MTLAUG_ATTACK_H_
