// core/src/synth.cc

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

#include "mtlaug/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mtlaug/error.h"
#include "mtlaug/rng.h"

namespace mtlaug {

namespace {

constexpr int kHarmonics = 8;
constexpr double kNoiseFloor = 1e-3;

std::uint64_t UtteranceKey(int speaker, Emotion e, int index) {
  return (static_cast<std::uint64_t>(speaker) << 32) ^
         (static_cast<std::uint64_t>(EmotionIndex(e)) << 24) ^
         static_cast<std::uint64_t>(index);
}

}  // namespace

std::array<ProsodyPrototype, kNumEmotions> SynthConfig::DefaultPrototypes() {
  return {{
      {250.0, 40.0, 0.80, 5.0},   // angry: high, rising, loud, fast
      {195.0, 80.0, 0.55, 4.0},   // happy
      {145.0, 0.0, 0.35, 3.0},    // neutral
      {100.0, -25.0, 0.20, 2.0},  // sad: low, falling, soft, slow
  }};
}

void SynthConfig::Validate() const {
  if (n_speakers <= 0) throw ValidationError("synth: n_speakers must be positive");
  if (utterances_per_speaker_per_class <= 0)
    throw ValidationError("synth: utterances_per_speaker_per_class must be positive");
  if (!(duration_s > 0)) throw ValidationError("synth: duration_s must be positive");
  if (sample_rate <= 0) throw ValidationError("synth: sample_rate must be positive");
  for (int a = 0; a < kNumEmotions; ++a)
    for (int b = a + 1; b < kNumEmotions; ++b)
      if (class_prototypes[a] == class_prototypes[b])
        throw ValidationError("synth: class prototypes must be pairwise distinct");
}

Waveform SynthesizeUtterance(const SynthConfig &config, int speaker, Emotion emotion,
                             int index) {
  if (!IsLabeled(emotion)) throw ValidationError("synth: emotion must be labeled");
  const ProsodyPrototype &proto = config.class_prototypes[EmotionIndex(emotion)];
  Rng root(config.seed);
  Rng spk_rng = root.Derive(0x5000 + static_cast<std::uint64_t>(speaker));
  const double speaker_offset =
      spk_rng.Uniform(-config.speaker_f0_spread_hz, config.speaker_f0_spread_hz);
  const double speaker_timbre = spk_rng.Uniform(0.75, 0.95);

  Rng rng = root.Derive(UtteranceKey(speaker, emotion, index));
  const double j = config.utterance_jitter;
  const double f0 = (proto.base_f0_hz + speaker_offset +
                     rng.Uniform(-config.utterance_f0_jitter_hz, config.utterance_f0_jitter_hz)) *
                    config.f0_scale;
  const double slope = proto.f0_slope_hz_per_s * config.f0_scale * rng.Uniform(1 - j, 1 + j);
  const double rate = proto.syllable_rate_hz * config.rate_scale * rng.Uniform(1 - j, 1 + j);
  const double energy = proto.energy * config.energy_scale * rng.Uniform(1 - j, 1 + j);
  const double env_phase = rng.Uniform(0.0, std::numbers::pi);

  const auto n = static_cast<std::size_t>(std::llround(config.duration_s * config.sample_rate));
  Waveform w;
  w.sample_rate = config.sample_rate;
  w.samples.resize(n);
  const double dt = 1.0 / config.sample_rate;
  const double nyquist_guard = 0.45 * config.sample_rate;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double inst_f0 = std::max(40.0, f0 + slope * (t - config.duration_s / 2));
    phase += 2.0 * std::numbers::pi * inst_f0 * dt;
    double tone = 0.0;
    double amp_sum = 0.0;
    for (int h = 1; h <= kHarmonics; ++h) {
      if (h * inst_f0 >= nyquist_guard) break;
      const double a = std::pow(speaker_timbre, h - 1) / h;
      tone += a * std::sin(h * phase);
      amp_sum += a;
    }
    tone /= amp_sum;
    const double syl = std::sin(std::numbers::pi * rate * t + env_phase);
    const double envelope = energy * (0.25 + 0.75 * syl * syl);
    w.samples[i] = envelope * tone + kNoiseFloor * rng.Normal();
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.95)
    for (double &v : w.samples) v *= 0.95 / peak;
  return w;
}

Corpus SynthCorpus(const SynthConfig &config, const std::filesystem::path &out_dir) {
  config.Validate();
  std::filesystem::create_directories(out_dir / "wav");
  std::vector<Utterance> rows;
  for (int s = 0; s < config.n_speakers; ++s) {
    const std::string speaker = config.speaker_prefix + std::to_string(s);
    for (int e = 0; e < kNumEmotions; ++e) {
      const auto emotion = static_cast<Emotion>(e);
      for (int i = 0; i < config.utterances_per_speaker_per_class; ++i) {
        Utterance u;
        u.id = speaker + "_" + std::string(EmotionName(emotion)) + "_" + std::to_string(i);
        u.audio_path = out_dir / "wav" / (u.id + ".wav");
        u.speaker_id = speaker;
        u.emotion = emotion;
        u.corpus_tag = config.corpus_tag;
        WriteWav(SynthesizeUtterance(config, s, emotion, i), u.audio_path);
        rows.push_back(std::move(u));
      }
    }
  }
  Corpus corpus(config.corpus_tag, std::move(rows));
  WriteManifest(corpus, out_dir / "manifest.csv");
  return corpus;
}

Waveform SynthNoise(int kind, double duration_s, std::uint64_t seed, int sample_rate) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  double state = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double white = rng.Normal();
    switch (kind) {
      case 0: w.samples[i] = white; break;
      case 1: state = 0.9 * state + 0.1 * white; w.samples[i] = 3.0 * state; break;
      case 2: state = 0.99 * state + 0.01 * white; w.samples[i] = 10.0 * state; break;
      default: {
        const double t = static_cast<double>(i) / sample_rate;
        w.samples[i] = std::sin(2 * std::numbers::pi * 100.0 * t) +
                       0.5 * std::sin(2 * std::numbers::pi * 300.0 * t) + 0.2 * white;
      }
    }
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0)
    for (double &v : w.samples) v *= 0.5 / peak;
  return w;
}

}  // namespace mtlaug
