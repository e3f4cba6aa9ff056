// core/include/mtlaug/synth.h

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

// License-free stand-in corpora: harmonic tone stacks whose pitch contour,
// loudness and syllable rhythm follow a per-emotion prosody prototype.

#ifndef MTLAUG_SYNTH_H_
#define MTLAUG_SYNTH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "mtlaug/corpus.h"
#include "mtlaug/waveform.h"

namespace mtlaug {

struct ProsodyPrototype {
  double base_f0_hz = 150.0;
  double f0_slope_hz_per_s = 0.0;
  /// Peak amplitude of the syllable envelope.
  double energy = 0.5;
  double syllable_rate_hz = 3.0;

  bool operator==(const ProsodyPrototype &) const = default;
};

struct SynthConfig {
  int n_speakers = 4;
  int utterances_per_speaker_per_class = 20;
  double duration_s = 1.0;
  std::uint64_t seed = 7;
  int sample_rate = kCanonicalSampleRate;
  /// Indexed by EmotionIndex: angry, happy, neutral, sad.
  std::array<ProsodyPrototype, kNumEmotions> class_prototypes = DefaultPrototypes();
  /// Half-range of the fixed per-speaker f0 offset.
  double speaker_f0_spread_hz = 15.0;
  /// Half-range of per-utterance f0 jitter.
  double utterance_f0_jitter_hz = 6.0;
  /// Relative half-range of per-utterance rate and energy jitter.
  double utterance_jitter = 0.1;
  /// Global prototype shifts, used to build mismatched corpus pairs.
  double f0_scale = 1.0;
  double rate_scale = 1.0;
  double energy_scale = 1.0;
  std::string speaker_prefix = "spk";
  std::string corpus_tag = "synth";

  static std::array<ProsodyPrototype, kNumEmotions> DefaultPrototypes();
  /// Throws ValidationError on zero counts, non-positive duration, or
  /// duplicate prototypes.
  void Validate() const;
  bool operator==(const SynthConfig &) const = default;
};

/// Deterministic rendering of one utterance.
Waveform SynthesizeUtterance(const SynthConfig &config, int speaker, Emotion emotion,
                             int index);

/// Renders every utterance into `out_dir` and writes `out_dir/manifest.csv`.
Corpus SynthCorpus(const SynthConfig &config, const std::filesystem::path &out_dir);

/// Coloured noise pool used when no recorded noise directory is configured.
/// kind 0 = white, 1 = pink-ish (one-pole low-passed), 2 = brown-ish, 3 = hum.
Waveform SynthNoise(int kind, double duration_s, std::uint64_t seed,
                    int sample_rate = kCanonicalSampleRate);

}  // namespace mtlaug

#endif  // MTLAUG_SYNTH_H_
