// tests/unit/model_test.cc

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

#include <gtest/gtest.h>

#include <cmath>

#include "mtlaug/ad/adam.h"
#include "mtlaug/error.h"
#include "mtlaug/model.h"
#include "test_support.h"

namespace mtlaug {
namespace {

using ad::Tensor;

ModelConfig TinyConfig() {
  ModelConfig c;
  c.input_mels = 12;
  c.input_frames = 16;
  c.encoder = {{5, 4, 2}, {3, 6, 2}};
  c.ce_units = 6;
  c.ce_dense = 8;
  c.ca_units = 6;
  c.ca_dense = 8;
  return c;
}

LogMelSpectrogram RandomSpec(const ModelConfig &c, std::uint64_t seed) {
  Rng rng(seed);
  LogMelSpectrogram s(c.input_mels, c.input_frames);
  for (auto &x : s.data) x = static_cast<float>(rng.Normal());
  return s;
}

std::vector<float> Row(const Tensor<float> &t, std::size_t r) {
  const std::size_t w = t.numel() / t.dim(0);
  return {t.data().begin() + r * w, t.data().begin() + (r + 1) * w};
}

TEST(EncoderTest, IdenticalInputsIdenticalRows) {
  Model m(TinyConfig(), 1);
  auto s = RandomSpec(m.config(), 2);
  auto z = m.Encode(m.Normalize(m.Input({&s, &s})));
  EXPECT_EQ(Row(z, 0), Row(z, 1));
  const auto lat = m.config().Latent();
  EXPECT_EQ(z.shape(), (ad::Shape{2, lat.channels, lat.height, lat.width}));
  auto seq = Model::Sequence(z);
  EXPECT_EQ(seq.shape(), (ad::Shape{2, lat.seq_len(), lat.seq_dim()}));
}

TEST(EncoderTest, InputGradientMatchesFiniteDifferences) {
  Model m(TinyConfig(), 3);
  auto s = RandomSpec(m.config(), 4);
  std::vector<float> v(s.data.begin(), s.data.end());
  auto x = Tensor<float>::Parameter({1, 1, 12, 16}, v);
  auto loss = [&] { return ad::Mean(m.Encode(x)); };
  loss().Backward();
  std::vector<float> g(x.grad().begin(), x.grad().end());
  auto data = x.mutable_data();
  double worst = 0;
  const float h = 1e-3f;
  for (std::size_t i = 0; i < data.size(); i += 7) {
    const float o = data[i];
    data[i] = o + h;
    const double fp = loss().item();
    data[i] = o - h;
    const double fm = loss().item();
    data[i] = o;
    const double num = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(num - g[i]) / std::max({std::abs(num), std::abs(double(g[i])), 1e-2}));
  }
  EXPECT_LT(worst, 1e-2);
}

TEST(DecoderTest, ShapeAndFiniteness) {
  Model m(TinyConfig(), 5);
  auto s = RandomSpec(m.config(), 6);
  auto x = m.Normalize(m.Input({&s}));
  auto xh = m.Decode(m.Encode(x));
  EXPECT_EQ(xh.shape(), x.shape());
  for (float v : xh.data()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_TRUE(std::isfinite(ad::SquaredError(xh, x).item()));
}

TEST(DecoderTest, OverfitsSingleBatch) {
  auto c = TinyConfig();
  c.encoder = {{5, 16, 2}, {3, 32, 1}};
  Model m(c, 7);
  auto a = RandomSpec(m.config(), 8), b = RandomSpec(m.config(), 9);
  auto x = m.Normalize(m.Input({&a, &b}));
  ad::Adam adam(3e-3);
  const std::set<std::string> groups{kGroupEncoder, kGroupDecoder};
  double first = 0, last = 0;
  for (int step = 0; step < 200; ++step) {
    auto loss = ad::SquaredError(m.Decode(m.Encode(x)), x);
    if (step == 0) first = loss.item();
    last = loss.item();
    loss.Backward();
    adam.Step(m.params(), groups);
    m.params().ZeroGrad();
  }
  EXPECT_LE(last * 10.0, first) << first << " -> " << last;
}

TEST(AttentionTest, SingleStepAndZeroWeights) {
  Rng rng(10);
  auto h1 = Tensor<double>::Constant({1, 1, 3}, {0.5, -1.0, 2.0});
  auto one = ad::AttentionPool<double>(Tensor<double>::Constant({3, 1}, {0.3, 0.1, -0.7}))(h1);
  EXPECT_DOUBLE_EQ(one.weights.data()[0], 1.0);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(one.pooled.data()[i], h1.data()[i]);

  auto h = Tensor<double>::Constant({2, 5, 3}, testing::RandomVector(30, rng));
  auto zero = ad::AttentionPool<double>(Tensor<double>::Zeros({3, 1}))(h);
  auto mean = ad::MeanPool(h).pooled;
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(zero.pooled.data()[i], mean.data()[i], 1e-12);
}

TEST(AttentionTest, WeightsSumToOneAndShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto h = Tensor<double>::Constant({3, 7, 4}, testing::RandomVector(84, rng, 3.0));
    auto wv = testing::RandomVector(4, rng, 2.0);
    auto o = ad::AttentionPool<double>(Tensor<double>::Constant({4, 1}, wv))(h);
    for (int b = 0; b < 3; ++b) {
      double s = 0;
      for (int t = 0; t < 7; ++t) {
        EXPECT_GE(o.weights.data()[b * 7 + t], 0.0);
        s += o.weights.data()[b * 7 + t];
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
    for (auto &w : wv) w *= 2.5;
    auto o2 = ad::AttentionPool<double>(Tensor<double>::Constant({4, 1}, wv))(h);
    for (int b = 0; b < 3; ++b) {
      auto arg = [&](const Tensor<double> &w) {
        int best = 0;
        for (int t = 1; t < 7; ++t)
          if (w.data()[b * 7 + t] > w.data()[b * 7 + best]) best = t;
        return best;
      };
      EXPECT_EQ(arg(o.weights), arg(o2.weights));
    }
  }
}

TEST(EmotionHeadTest, ShapesAndDeterminism) {
  Model m(TinyConfig(), 12);
  auto s = RandomSpec(m.config(), 13);
  auto z = Model::Sequence(m.Encode(m.Normalize(m.Input({&s, &s}))));
  auto out = m.ClassifyEmotion(z);
  EXPECT_EQ(out.logits.shape(), (ad::Shape{2, 4}));
  EXPECT_EQ(out.features.shape(), (ad::Shape{2, 8}));
  EXPECT_EQ(Row(out.logits, 0), Row(out.logits, 1));
  auto p = ad::Softmax(out.logits);
  EXPECT_NEAR(p.data()[0] + p.data()[1] + p.data()[2] + p.data()[3], 1.0, 1e-6);
}

TEST(AugTypeHeadTest, EvalDeterministicTrainSeeded) {
  Model m(TinyConfig(), 14);
  auto s = RandomSpec(m.config(), 15);
  auto z = Model::Sequence(m.Encode(m.Normalize(m.Input({&s}))));
  auto a = m.ClassifyAugType(z, false, nullptr), b = m.ClassifyAugType(z, false, nullptr);
  EXPECT_EQ(a.shape(), (ad::Shape{1, 4}));
  EXPECT_EQ(Row(a, 0), Row(b, 0));
  Rng r1(3), r2(3);
  EXPECT_EQ(Row(m.ClassifyAugType(z, true, &r1), 0), Row(m.ClassifyAugType(z, true, &r2), 0));
}

TEST(BuildModelTest, FullAndPlainRows) {
  Model full(ModelConfig::Ablation(1, TinyConfig()), 1);
  EXPECT_NE(full.params().Find("emotion.attention.w"), nullptr);
  EXPECT_FALSE(full.centers().empty());
  EXPECT_TRUE(full.params().HasGroup(kGroupDecoder));
  EXPECT_TRUE(full.params().HasGroup(kGroupAugType));
  Model plain(ModelConfig::Ablation(5, TinyConfig()), 1);
  EXPECT_FALSE(plain.params().HasGroup(kGroupDecoder));
  EXPECT_FALSE(plain.params().HasGroup(kGroupAugType));
  EXPECT_EQ(plain.params().Find("emotion.attention.w"), nullptr);
  EXPECT_TRUE(plain.centers().empty());
}

TEST(BuildModelTest, ParameterCountDecreasesAlongRows) {
  std::size_t prev = SIZE_MAX;
  for (int row = 1; row <= 5; ++row) {
    Model m(ModelConfig::Ablation(row, TinyConfig()), 1);
    EXPECT_LT(m.ParameterCount(), prev) << row;
    prev = m.ParameterCount();
  }
}

TEST(BuildModelTest, UnreachableAuxiliaryTermRejected) {
  auto c = TinyConfig();
  c.use_aux_augtype = false;
  c.use_aux_reconstruction = false;
  c.lambda1 = 0.5;
  EXPECT_THROW(c.Validate(), ConfigError);
  EXPECT_THROW(Model(c, 1), ConfigError);
  c.lambda1 = 0.0;
  EXPECT_NO_THROW(c.Validate());
}

TEST(BuildModelTest, ComponentsInitialiseIndependently) {
  Model a(ModelConfig::Ablation(1, TinyConfig()), 9);
  Model b(ModelConfig::Ablation(4, TinyConfig()), 9);
  EXPECT_EQ(a.Checksum({kGroupEncoder}), b.Checksum({kGroupEncoder}));
  auto c = a.Clone();
  EXPECT_EQ(c->Checksum(), a.Checksum());
}

TEST(ModelTest, PredictMatchesLogits) {
  Model m(TinyConfig(), 16);
  std::vector<LogMelSpectrogram> specs;
  for (int i = 0; i < 5; ++i) specs.push_back(RandomSpec(m.config(), 20 + i));
  std::vector<const LogMelSpectrogram *> ptrs;
  for (auto &s : specs) ptrs.push_back(&s);
  auto pred = m.Predict(ptrs, 2);
  auto logits = m.EmotionLogits(m.Input(ptrs));
  for (int i = 0; i < 5; ++i) {
    auto r = Row(logits, i);
    EXPECT_EQ(pred[i], std::max_element(r.begin(), r.end()) - r.begin());
  }
  LogMelSpectrogram wrong(m.config().input_mels, m.config().input_frames + 1);
  EXPECT_THROW(m.Input({&wrong}), ShapeError);
}

}  // namespace
}  // namespace mtlaug
