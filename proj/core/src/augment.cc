// core/src/augment.cc

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

#include "mtlaug/augment.h"

#include <algorithm>
#include <cmath>

#include "mtlaug/error.h"

namespace mtlaug {

std::string_view AugmentationTypeName(AugmentationType t) {
  switch (t) {
    case AugmentationType::kNone: return "none";
    case AugmentationType::kSpeed: return "speed";
    case AugmentationType::kSpecAugment: return "specaugment";
    case AugmentationType::kMixup: return "mixup";
  }
  return "?";
}

AugmentationType ParseAugmentationType(std::string_view name) {
  for (int i = 0; i < kNumAugmentationTypes; ++i) {
    auto t = static_cast<AugmentationType>(i);
    if (AugmentationTypeName(t) == name) return t;
  }
  throw ValidationError("unknown augmentation type '" + std::string(name) + "'");
}

void SpecAugmentParams::Validate(int v, int tau) const {
  if (F < 0 || F > v)
    throw ValidationError("specaugment: F=" + std::to_string(F) + " outside [0, " +
                          std::to_string(v) + "]");
  if (T_max < 0 || T_max > tau)
    throw ValidationError("specaugment: T_max=" + std::to_string(T_max) + " outside [0, " +
                          std::to_string(tau) + "]");
  if (n_freq_masks < 0 || n_time_masks < 0) throw ValidationError("specaugment: negative count");
}

namespace {

SpecMask DrawOne(bool frequency, int max_width, int extent, Rng &rng) {
  SpecMask m;
  m.frequency = frequency;
  m.width = static_cast<int>(rng.UniformInt(0, max_width));
  // start in [0, extent - width); a full-width band can only start at 0.
  const int hi = std::max(0, extent - m.width - 1);
  m.start = static_cast<int>(rng.UniformInt(0, hi));
  return m;
}

}  // namespace

std::vector<SpecMask> DrawSpecMasks(const SpecAugmentParams &params, int v, int tau, Rng &rng) {
  params.Validate(v, tau);
  std::vector<SpecMask> masks;
  for (int i = 0; i < params.n_freq_masks; ++i) masks.push_back(DrawOne(true, params.F, v, rng));
  for (int i = 0; i < params.n_time_masks; ++i)
    masks.push_back(DrawOne(false, params.T_max, tau, rng));
  return masks;
}

LogMelSpectrogram ApplySpecMasks(const LogMelSpectrogram &spec, const std::vector<SpecMask> &masks,
                                 float value) {
  LogMelSpectrogram out = spec;
  for (const auto &m : masks) {
    const int extent = m.frequency ? spec.n_mels : spec.n_frames;
    if (m.start < 0 || m.width < 0 || m.start + m.width > extent)
      throw ValidationError("specaugment: mask exceeds spectrogram bounds");
    for (int i = m.start; i < m.start + m.width; ++i) {
      if (m.frequency) {
        for (int t = 0; t < spec.n_frames; ++t) out.at(i, t) = value;
      } else {
        for (int f = 0; f < spec.n_mels; ++f) out.at(f, i) = value;
      }
    }
  }
  return out;
}

LogMelSpectrogram SpecAugment(const LogMelSpectrogram &spec, const SpecAugmentParams &params,
                              Rng &rng, std::vector<SpecMask> *masks) {
  auto drawn = DrawSpecMasks(params, spec.n_mels, spec.n_frames, rng);
  float value = 0.0f;
  if (params.mask_with_mean && !spec.data.empty()) {
    double s = 0.0;
    for (float x : spec.data) s += x;
    value = static_cast<float>(s / static_cast<double>(spec.data.size()));
  }
  auto out = ApplySpecMasks(spec, drawn, value);
  if (masks) *masks = std::move(drawn);
  return out;
}

void MixupParams::Validate() const {
  if (fixed_lambda && !(*fixed_lambda >= 0.0 && *fixed_lambda <= 1.0))
    throw ValidationError("mixup: lambda must lie in [0, 1]");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("mixup: alpha must be > 0");
}

double MixupParams::Draw(Rng &rng) const {
  if (fixed_lambda) return *fixed_lambda;
  return std::clamp(rng.Beta(alpha, alpha), 0.0, 1.0);
}

SoftLabel OneHot(Emotion e) {
  if (!IsLabeled(e)) throw ValidationError("one-hot of an unlabeled utterance");
  SoftLabel y{};
  y[static_cast<std::size_t>(EmotionIndex(e))] = 1.0f;
  return y;
}

int AugmentedSample::HardLabel() const {
  if (!emotion) return -1;
  int idx = -1;
  for (int k = 0; k < kNumEmotions; ++k) {
    const float v = (*emotion)[static_cast<std::size_t>(k)];
    if (v == 1.0f) {
      idx = k;
    } else if (v != 0.0f) {
      return -1;
    }
  }
  return idx;
}

void AugmentedSample::Validate() const {
  if (emotion) {
    double s = 0.0;
    for (float v : *emotion) {
      if (v < 0.0f) throw ValidationError("augmented sample: negative label entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-5) throw ValidationError("augmented sample: label does not sum to 1");
  }
  const bool two = source_ids.size() == 2;
  if (two != (aug_type == AugmentationType::kMixup) || source_ids.empty() || source_ids.size() > 2)
    throw ValidationError("augmented sample: source ids inconsistent with augmentation type");
}

Waveform SpeedPerturb(const Waveform &wave, double factor) { return Resample(wave, factor); }

AugmentedSample Mixup(const AugmentedSample &a, const AugmentedSample &b, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("mixup: lambda must lie in [0, 1]");
  if (!a.features.SameShape(b.features)) throw ValidationError("mixup: feature shapes differ");
  if (!a.labeled() || !b.labeled()) throw ValidationError("mixup: both inputs need labels");
  AugmentedSample out;
  out.features = LogMelSpectrogram(a.features.n_mels, a.features.n_frames);
  const double mu = 1.0 - lambda;
  // Scale then add, lambda-weighted operand first; fp addition commutes so
  // Mixup(a, b, l) == Mixup(b, a, 1 - l) exactly.
  for (std::size_t i = 0; i < out.features.data.size(); ++i)
    out.features.data[i] =
        static_cast<float>(lambda * a.features.data[i] + mu * b.features.data[i]);
  SoftLabel y{};
  for (std::size_t k = 0; k < y.size(); ++k)
    y[k] = static_cast<float>(lambda * (*a.emotion)[k] + mu * (*b.emotion)[k]);
  out.emotion = y;
  out.aug_type = AugmentationType::kMixup;
  out.source_ids = {a.source_ids.front(), b.source_ids.front()};
  out.speaker_id = a.speaker_id;
  return out;
}

void AugmentPolicy::Validate() const {
  if (none < 0 || speed < 0 || specaugment < 0 || mixup < 0)
    throw ValidationError("policy: negative multiplicity");
  if (none == 0 && speed == 0 && specaugment == 0 && mixup == 0)
    throw ValidationError("policy: empty");
  if (speed > 0 && speed_factors.empty()) throw ValidationError("policy: no speed factors");
  for (double f : speed_factors)
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("policy: bad speed factor");
  mix.Validate();
  if (spec.F < 0 || spec.T_max < 0 || spec.n_freq_masks < 0 || spec.n_time_masks < 0)
    throw ValidationError("policy: bad specaugment parameters");
}

bool AugmentPolicy::Includes(AugmentationType t) const {
  switch (t) {
    case AugmentationType::kNone: return none > 0;
    case AugmentationType::kSpeed: return speed > 0;
    case AugmentationType::kSpecAugment: return specaugment > 0;
    case AugmentationType::kMixup: return mixup > 0;
  }
  return false;
}

int AugmentPolicy::AuxLabel(AugmentationType t) const {
  if (binary_aux) return t == AugmentationType::kNone ? 0 : 1;
  return static_cast<int>(t);
}

AugmentPolicy AugmentPolicy::All() { return {}; }

AugmentPolicy AugmentPolicy::NoneOnly() {
  AugmentPolicy p;
  p.speed = p.specaugment = p.mixup = 0;
  return p;
}

AugmentPolicy AugmentPolicy::Single(AugmentationType t) {
  AugmentPolicy p = NoneOnly();
  p.binary_aux = true;
  switch (t) {
    case AugmentationType::kSpeed: p.speed = 2; break;
    case AugmentationType::kSpecAugment: p.specaugment = 1; break;
    case AugmentationType::kMixup: p.mixup = 1; break;
    case AugmentationType::kNone: p.binary_aux = false; break;
  }
  return p;
}

std::vector<AugmentedSample> BuildAugmentedSet(const Corpus &corpus, const AugmentPolicy &policy,
                                               const FeatureSource &features, const Rng &rng) {
  policy.Validate();
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (IsLabeled(corpus[i].emotion)) labeled.push_back(i);
  if (policy.mixup > 0 && labeled.size() < 2)
    throw ProtocolError("mixup needs at least two labeled utterances, corpus '" + corpus.name() +
                        "' has " + std::to_string(labeled.size()));

  std::vector<AugmentedSample> out;
  std::vector<AugmentedSample> originals(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Utterance &u = corpus[i];
    Rng local = rng.Derive(i);
    AugmentedSample base;
    base.features = features(u, 1.0);
    if (IsLabeled(u.emotion)) base.emotion = OneHot(u.emotion);
    base.source_ids = {u.id};
    base.speaker_id = u.speaker_id;
    originals[i] = base;
    for (int c = 0; c < policy.none; ++c) out.push_back(base);
    for (int c = 0; c < policy.speed; ++c) {
      AugmentedSample s = base;
      s.features = features(u, policy.speed_factors[static_cast<std::size_t>(c) %
                                                    policy.speed_factors.size()]);
      s.aug_type = AugmentationType::kSpeed;
      out.push_back(std::move(s));
    }
    for (int c = 0; c < policy.specaugment; ++c) {
      AugmentedSample s = base;
      s.features = SpecAugment(base.features, policy.spec, local);
      s.aug_type = AugmentationType::kSpecAugment;
      out.push_back(std::move(s));
    }
  }
  if (policy.mixup > 0 && labeled.size() >= 2) {
    for (std::size_t li = 0; li < labeled.size(); ++li) {
      Rng local = rng.Derive(corpus.size() + li);
      for (int c = 0; c < policy.mixup; ++c) {
        // Partner uniform over the other labeled utterances.
        auto j = static_cast<std::size_t>(local.UniformInt(0, static_cast<std::int64_t>(labeled.size()) - 2));
        if (j >= li) ++j;
        const double lambda = policy.mix.Draw(local);
        out.push_back(Mixup(originals[labeled[li]], originals[labeled[j]], lambda));
      }
    }
  }
  return out;
}

}  // namespace mtlaug
