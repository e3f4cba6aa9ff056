// core/include/mtlaug/waveform.h

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

#ifndef MTLAUG_WAVEFORM_H_
#define MTLAUG_WAVEFORM_H_

#include <filesystem>
#include <vector>

namespace mtlaug {

inline constexpr int kCanonicalSampleRate = 16000;

/// Mono PCM signal, nominal amplitude range [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kCanonicalSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  /// Throws ValidationError if empty, non-positive rate, or non-finite.
  void Validate() const;

  bool operator==(const Waveform &) const = default;
};

/// Decodes RIFF WAVE (PCM 8/16/24/32-bit or IEEE float32), averages
/// channels, and resamples to the canonical rate.
Waveform ReadWav(const std::filesystem::path &path);
/// Decodes without resampling.
Waveform ReadWavNative(const std::filesystem::path &path);
/// Writes 16-bit PCM mono. Samples are clamped to [-1, 1] and rounded.
void WriteWav(const Waveform &wave, const std::filesystem::path &path);

}  // namespace mtlaug

#endif  // MTLAUG_WAVEFORM_H_
