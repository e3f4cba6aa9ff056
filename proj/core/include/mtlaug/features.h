// core/include/mtlaug/features.h

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

#ifndef MTLAUG_FEATURES_H_
#define MTLAUG_FEATURES_H_

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "mtlaug/augment.h"
#include "mtlaug/corpus.h"
#include "mtlaug/dsp.h"

namespace mtlaug {

/// Memoised log-Mel extraction keyed by (audio path, speed factor). When a
/// cache directory is given, features are also persisted there as LMSP blobs
/// under a sub-directory named after the feature-config hash. Safe to share
/// between threads.
class FeatureBank {
 public:
  explicit FeatureBank(FeatureConfig config,
                       std::optional<std::filesystem::path> cache_dir = std::nullopt);

  const FeatureConfig &config() const { return config_; }

  /// Throws MissingCorpusError if the audio file does not exist.
  LogMelSpectrogram Get(const Utterance &u, double speed_factor = 1.0);
  LogMelSpectrogram Extract(const Waveform &wave) const { return LogMel(wave, config_); }

  FeatureSource AsSource();

  std::size_t size() const;

 private:
  LogMelSpectrogram Compute(const Utterance &u, double speed_factor) const;

  FeatureConfig config_;
  std::optional<std::filesystem::path> cache_dir_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, double>, LogMelSpectrogram> memo_;
};

/// FNV-1a 64-bit hash rendered as 16 hex digits.
std::string HashHex(std::string_view bytes);
std::string FeatureConfigHash(const FeatureConfig &config);

}  // namespace mtlaug

#endif  // MTLAUG_FEATURES_H_
