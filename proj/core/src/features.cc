// core/src/features.cc

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

#include "mtlaug/features.h"

#include <cstdio>

#include "json.hpp"
#include "mtlaug/error.h"
#include "mtlaug/waveform.h"

namespace mtlaug {

std::string HashHex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string FeatureConfigHash(const FeatureConfig &c) {
  nlohmann::json j = {{"win_ms", c.win_ms},   {"hop_ms", c.hop_ms},
                      {"n_mels", c.n_mels},   {"n_fft", c.n_fft},
                      {"fmin", c.fmin},       {"fmax", c.fmax},
                      {"target_dur_s", c.target_dur_s}, {"log_floor", c.log_floor},
                      {"sample_rate", c.sample_rate}};
  return HashHex(j.dump());
}

FeatureBank::FeatureBank(FeatureConfig config, std::optional<std::filesystem::path> cache_dir)
    : config_(std::move(config)), cache_dir_(std::move(cache_dir)) {
  config_.Validate();
  if (cache_dir_) *cache_dir_ /= FeatureConfigHash(config_);
}

LogMelSpectrogram FeatureBank::Compute(const Utterance &u, double speed_factor) const {
  if (!std::filesystem::exists(u.audio_path))
    throw MissingCorpusError("audio file not found: " + u.audio_path.string());
  Waveform w = ReadWav(u.audio_path);
  if (speed_factor != 1.0) w = SpeedPerturb(w, speed_factor);
  return LogMel(w, config_);
}

LogMelSpectrogram FeatureBank::Get(const Utterance &u, double speed_factor) {
  auto key = std::make_pair(std::filesystem::absolute(u.audio_path).lexically_normal().string(),
                            speed_factor);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  std::optional<std::filesystem::path> blob;
  if (cache_dir_) {
    char speed[32];
    std::snprintf(speed, sizeof(speed), "%.6f", speed_factor);
    blob = *cache_dir_ / (HashHex(key.first + "@" + speed) + ".lmsp");
  }
  LogMelSpectrogram spec;
  if (blob && std::filesystem::exists(*blob)) {
    spec = ReadFeatureBlob(*blob);
  } else {
    spec = Compute(u, speed_factor);
    if (blob) {
      std::filesystem::create_directories(blob->parent_path());
      auto tmp = *blob;
      tmp += ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&spec));
      WriteFeatureBlob(spec, tmp);
      std::filesystem::rename(tmp, *blob);
      auto sidecar = blob->parent_path() / "config.json";
      if (!std::filesystem::exists(sidecar)) WriteFeatureSidecar(config_, sidecar);
    }
  }
  std::lock_guard<std::mutex> lock(mu_);
  return memo_.emplace(std::move(key), std::move(spec)).first->second;
}

FeatureSource FeatureBank::AsSource() {
  return [this](const Utterance &u, double f) { return Get(u, f); };
}

std::size_t FeatureBank::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return memo_.size();
}

}  // namespace mtlaug
