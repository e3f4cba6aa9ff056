// tests/unit/attack_test.cc

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

#include "mtlaug/ad/ops.h"
#include "mtlaug/attack.h"
#include "mtlaug/error.h"
#include "test_support.h"

namespace mtlaug {
namespace {

class AttackTest : public ::testing::Test {
 protected:
  AttackTest() : model_(Config(), 3) {
    for (int i = 0; i < 4; ++i) {
      Rng rng(40 + i);
      LogMelSpectrogram s(12, 16);
      for (auto &x : s.data) x = static_cast<float>(rng.Normal());
      specs_.push_back(s);
      labels_.push_back(i);
    }
    for (const auto &s : specs_) ptrs_.push_back(&s);
  }

  static ModelConfig Config() {
    ModelConfig c;
    c.input_mels = 12;
    c.input_frames = 16;
    c.encoder = {{5, 4, 2}, {3, 6, 2}};
    c.ce_units = 6;
    c.ce_dense = 8;
    c.use_aux_augtype = false;
    c.use_aux_reconstruction = false;
    c.lambda1 = 0;
    return c;
  }

  double Loss(const std::vector<LogMelSpectrogram> &xs) {
    std::vector<const LogMelSpectrogram *> p;
    for (const auto &s : xs) p.push_back(&s);
    std::vector<float> t(4 * xs.size(), 0.0f);
    for (std::size_t i = 0; i < xs.size(); ++i) t[4 * i + labels_[i]] = 1.0f;
    return ad::SoftmaxCrossEntropy<float>(model_.EmotionLogits(model_.Input(p)), t).item();
  }

  Model model_;
  std::vector<LogMelSpectrogram> specs_;
  std::vector<const LogMelSpectrogram *> ptrs_;
  std::vector<int> labels_;
};

TEST_F(AttackTest, ZeroEpsilonIsIdentity) {
  auto f = Fgsm(model_, ptrs_, labels_, 0.0);
  auto b = Bim(model_, ptrs_, labels_, 0.0, 10, 0.01);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    EXPECT_EQ(f[i], specs_[i]);
    EXPECT_EQ(b[i], specs_[i]);
  }
}

TEST_F(AttackTest, SingleStepBimIsFgsm) {
  auto f = Fgsm(model_, ptrs_, labels_, 0.08);
  auto b = Bim(model_, ptrs_, labels_, 0.08, 1, 0.08);
  for (std::size_t i = 0; i < specs_.size(); ++i) EXPECT_EQ(f[i], b[i]);
}

TEST_F(AttackTest, PerturbationBoundedAndLossRises) {
  for (auto kind : {AttackKind::kFgsm, AttackKind::kBim}) {
    AttackParams p;
    p.kind = kind;
    p.epsilon = 0.05;
    auto adv = Attack(model_, ptrs_, labels_, p);
    for (std::size_t i = 0; i < specs_.size(); ++i) EXPECT_LE(LinfDistance(adv[i], specs_[i]), 0.05 + 1e-6);
    EXPECT_GT(Loss(adv), Loss(specs_)) << AttackKindName(kind);
  }
}

TEST_F(AttackTest, FgsmFollowsGradientSign) {
  auto g = InputGradient(model_, ptrs_, labels_);
  auto adv = Fgsm(model_, ptrs_, labels_, 0.1);
  for (std::size_t i = 0; i < specs_.size(); ++i)
    for (std::size_t j = 0; j < g[i].size(); ++j) {
      const float d = adv[i].data[j] - specs_[i].data[j];
      if (g[i][j] > 0) {
        EXPECT_GT(d, 0.0f);
      }
      if (g[i][j] < 0) {
        EXPECT_LT(d, 0.0f);
      }
    }
}

TEST_F(AttackTest, InvalidParams) {
  EXPECT_THROW(Fgsm(model_, ptrs_, labels_, -0.1), ValidationError);
  AttackParams p;
  p.kind = AttackKind::kBim;
  p.steps = 0;
  EXPECT_THROW(p.Validate(), ValidationError);
  EXPECT_EQ(ParseAttackKind("bim"), AttackKind::kBim);
  EXPECT_THROW(ParseAttackKind("pgd"), ValidationError);
  p.steps = 4;
  p.epsilon = 0.08;
  EXPECT_DOUBLE_EQ(p.EffectiveStepSize(), 0.02);
}

}  // namespace
}  // namespace mtlaug
