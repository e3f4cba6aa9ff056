// core/include/mtlaug/augment.h

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

#ifndef MTLAUG_AUGMENT_H_
#define MTLAUG_AUGMENT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtlaug/corpus.h"
#include "mtlaug/dsp.h"
#include "mtlaug/rng.h"
#include "mtlaug/waveform.h"

namespace mtlaug {

/// Label of the auxiliary classifier. The numeric values are part of the
/// feature-cache format.
enum class AugmentationType : std::uint8_t {
  kNone = 0,
  kSpeed = 1,
  kSpecAugment = 2,
  kMixup = 3,
};
inline constexpr int kNumAugmentationTypes = 4;

std::string_view AugmentationTypeName(AugmentationType t);
/// Throws ValidationError on unknown names.
AugmentationType ParseAugmentationType(std::string_view name);

struct SpecAugmentParams {
  /// Maximum frequency-mask width in mel channels.
  int F = 27;
  /// Maximum time-mask width in frames.
  int T_max = 100;
  int n_freq_masks = 1;
  int n_time_masks = 1;
  /// Masked cells take the utterance mean; otherwise zero.
  bool mask_with_mean = true;
  /// Throws ValidationError unless 0 <= F <= v, 0 <= T_max <= tau, counts >= 0.
  void Validate(int v, int tau) const;
  bool operator==(const SpecAugmentParams &) const = default;
};

/// Band [start, start + width) along frequency (rows) or time (columns).
struct SpecMask {
  bool frequency = true;
  int start = 0;
  int width = 0;
  bool operator==(const SpecMask &) const = default;
};

/// Draws masks: width ~ U{0..F}, start ~ U{0..v-width-1} (start 0 when the
/// band covers the whole axis), likewise in time.
std::vector<SpecMask> DrawSpecMasks(const SpecAugmentParams &params, int v, int tau, Rng &rng);
/// Copy of `spec` with the masks applied; every other cell is untouched.
LogMelSpectrogram ApplySpecMasks(const LogMelSpectrogram &spec, const std::vector<SpecMask> &masks,
                                 float value);
/// Draw + apply. The drawn masks are returned through `masks` if non-null.
LogMelSpectrogram SpecAugment(const LogMelSpectrogram &spec, const SpecAugmentParams &params,
                              Rng &rng, std::vector<SpecMask> *masks = nullptr);

struct MixupParams {
  /// When set, every mix uses this lambda.
  std::optional<double> fixed_lambda;
  /// Beta(alpha, alpha) otherwise.
  double alpha = 0.2;
  void Validate() const;
  double Draw(Rng &rng) const;
  bool operator==(const MixupParams &) const = default;
};

/// Soft emotion target in (angry, happy, neutral, sad) order.
using SoftLabel = std::array<float, kNumEmotions>;
SoftLabel OneHot(Emotion e);

struct AugmentedSample {
  LogMelSpectrogram features;
  std::optional<SoftLabel> emotion;
  AugmentationType aug_type = AugmentationType::kNone;
  std::vector<std::string> source_ids;
  /// Speaker of the first source; used for stratification and leak checks.
  std::string speaker_id;

  bool labeled() const { return emotion.has_value(); }
  /// Class index of a hard (one-hot) label, -1 for soft or missing labels.
  int HardLabel() const;
  /// Throws ValidationError if the label or provenance invariants fail.
  void Validate() const;
};

/// Time warp on raw audio; delegates to Resample.
Waveform SpeedPerturb(const Waveform &wave, double factor);

/// x = lambda * a + (1 - lambda) * b, same for labels. Both inputs must be
/// labeled and equally shaped.
AugmentedSample Mixup(const AugmentedSample &a, const AugmentedSample &b, double lambda);

/// Which transforms a training set contains and how many copies of each.
struct AugmentPolicy {
  int none = 1;
  int speed = 2;
  int specaugment = 1;
  int mixup = 1;
  /// Speed copies cycle through these factors.
  std::vector<double> speed_factors{0.9, 1.1};
  SpecAugmentParams spec;
  MixupParams mix;
  /// Auxiliary labels collapse to {none, augmented}.
  bool binary_aux = false;

  void Validate() const;
  bool Includes(AugmentationType t) const;
  /// Number of auxiliary classes the policy induces.
  int NumAuxClasses() const { return binary_aux ? 2 : kNumAugmentationTypes; }
  /// Auxiliary class index of a sample type under this policy.
  int AuxLabel(AugmentationType t) const;

  static AugmentPolicy All();
  static AugmentPolicy NoneOnly();
  /// Originals plus one transform, binary auxiliary labels.
  static AugmentPolicy Single(AugmentationType t);
  bool operator==(const AugmentPolicy &) const = default;
};

/// Produces the log-Mel features of an utterance, optionally speed-warped.
using FeatureSource = std::function<LogMelSpectrogram(const Utterance &, double speed_factor)>;

/// Originals (aug_type none) plus the policy's variants, in utterance order:
/// for each utterance its none, speed and SpecAugment copies, then all mixup
/// samples. Mixup partners are other labeled utterances of the same corpus;
/// unlabeled utterances never take part in mixup. Each utterance draws from
/// its own derived stream, so the result does not depend on evaluation order.
/// Throws ProtocolError if mixup is requested with fewer than two labeled
/// utterances.
std::vector<AugmentedSample> BuildAugmentedSet(const Corpus &corpus, const AugmentPolicy &policy,
                                               const FeatureSource &features, const Rng &rng);

}  // namespace mtlaug

#endif  // MTLAUG_AUGMENT_H_
