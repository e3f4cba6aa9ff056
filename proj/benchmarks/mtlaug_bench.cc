// benchmarks/mtlaug_bench.cc

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

#include <benchmark/benchmark.h>

#include <vector>

#include "mtlaug/ad/ops.h"
#include "mtlaug/attack.h"
#include "mtlaug/augment.h"
#include "mtlaug/dsp.h"
#include "mtlaug/model.h"
#include "mtlaug/rng.h"
#include "mtlaug/synth.h"
#include "mtlaug/train.h"

namespace {

using namespace mtlaug;

FeatureConfig DeskFeatures() {
  FeatureConfig f;
  f.n_mels = 32;
  f.target_dur_s = 1.0;
  return f;
}

ModelConfig DeskModel() {
  ModelConfig m;
  m.input_mels = 32;
  m.input_frames = DeskFeatures().NumFrames();
  m.encoder = {{5, 8, 2}, {3, 16, 2}};
  m.ce_units = 16;
  m.ce_dense = 32;
  m.ca_units = 16;
  m.ca_dense = 32;
  return m;
}

std::vector<LogMelSpectrogram> RandomSpecs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto f = DeskFeatures();
  std::vector<LogMelSpectrogram> out(n);
  for (auto &s : out) {
    s.n_mels = f.n_mels;
    s.n_frames = f.NumFrames();
    s.data.resize(static_cast<std::size_t>(s.n_mels * s.n_frames));
    for (auto &v : s.data) v = static_cast<float>(rng.Normal());
  }
  return out;
}

void BM_LogMel(benchmark::State &state) {
  SynthConfig sc;
  auto wave = SynthesizeUtterance(sc, 0, Emotion::kAngry, 0);
  FeatureConfig f = DeskFeatures();
  f.n_mels = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(LogMel(wave, f));
}
BENCHMARK(BM_LogMel)->Arg(32)->Arg(128);

void BM_Resample(benchmark::State &state) {
  SynthConfig sc;
  auto wave = SynthesizeUtterance(sc, 0, Emotion::kSad, 0);
  for (auto _ : state) benchmark::DoNotOptimize(Resample(wave, 0.9));
}
BENCHMARK(BM_Resample);

void BM_SpecAugment(benchmark::State &state) {
  auto spec = RandomSpecs(1, 1).front();
  SpecAugmentParams p;
  p.F = 7;
  p.T_max = 20;
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(SpecAugment(spec, p, rng));
}
BENCHMARK(BM_SpecAugment);

void BM_Conv2dForwardBackward(benchmark::State &state) {
  Rng rng(3);
  const std::size_t b = static_cast<std::size_t>(state.range(0));
  std::vector<float> xv(b * 1 * 32 * 97), wv(8 * 1 * 5 * 5);
  for (auto &v : xv) v = static_cast<float>(rng.Normal());
  for (auto &v : wv) v = static_cast<float>(rng.Normal(0, 0.1));
  auto x = ad::Tensor<float>::Constant({b, 1, 32, 97}, xv);
  auto w = ad::Tensor<float>::Parameter({8, 1, 5, 5}, wv);
  for (auto _ : state) {
    auto y = ad::Sum(ad::Conv2d(x, w, 2, 2));
    y.Backward();
    w.ZeroGrad();
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(1)->Arg(16);

void BM_ModelPredict(benchmark::State &state) {
  Model model(DeskModel(), 1);
  auto specs = RandomSpecs(16, 4);
  std::vector<const LogMelSpectrogram *> ptrs;
  for (const auto &s : specs) ptrs.push_back(&s);
  for (auto _ : state) benchmark::DoNotOptimize(model.Predict(ptrs, 16));
}
BENCHMARK(BM_ModelPredict)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State &state) {
  Model model(DeskModel(), 1);
  ad::Adam adam(1e-3);
  AugmentPolicy policy;
  auto specs = RandomSpecs(16, 5);
  std::vector<AugmentedSample> samples(specs.size());
  std::vector<const AugmentedSample *> batch;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    samples[i].features = specs[i];
    samples[i].emotion = OneHot(static_cast<Emotion>(i % kNumEmotions));
    samples[i].aug_type = static_cast<AugmentationType>(i % kNumAugmentationTypes);
    samples[i].source_ids = {"u" + std::to_string(i)};
    batch.push_back(&samples[i]);
  }
  Rng rng(6);
  for (auto _ : state)
    benchmark::DoNotOptimize(TrainStep(model, adam, batch, BatchMode::kLabeled, policy, rng));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Bim(benchmark::State &state) {
  Model model(DeskModel(), 1);
  auto specs = RandomSpecs(16, 7);
  std::vector<const LogMelSpectrogram *> ptrs;
  std::vector<int> labels;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ptrs.push_back(&specs[i]);
    labels.push_back(static_cast<int>(i % kNumEmotions));
  }
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Bim(model, ptrs, labels, 0.08, steps, 0.08 / steps));
}
BENCHMARK(BM_Bim)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
