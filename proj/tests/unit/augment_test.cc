// tests/unit/augment_test.cc

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

#include <map>
#include <numbers>
#include <set>

#include "mtlaug/augment.h"
#include "mtlaug/error.h"
#include "mtlaug/rng.h"
#include "test_support.h"

namespace mtlaug {
namespace {

LogMelSpectrogram RandomSpec(int v, int tau, std::uint64_t seed) {
  Rng rng(seed);
  LogMelSpectrogram s(v, tau);
  for (auto &x : s.data) x = static_cast<float>(rng.Normal());
  return s;
}

AugmentedSample Labeled(Emotion e, std::uint64_t seed) {
  AugmentedSample s;
  s.features = RandomSpec(8, 6, seed);
  s.emotion = OneHot(e);
  s.source_ids = {"u" + std::to_string(seed)};
  s.speaker_id = "s";
  return s;
}

Corpus LabeledCorpus(std::size_t n, std::size_t unlabeled = 0) {
  std::vector<Utterance> u;
  for (std::size_t i = 0; i < n + unlabeled; ++i)
    u.push_back({"u" + std::to_string(i), "u.wav", "s" + std::to_string(i % 4),
                 i < n ? static_cast<Emotion>(i % kNumEmotions) : Emotion::kUnlabeled, "t"});
  return Corpus("c", u);
}

FeatureSource FakeSource() {
  return [](const Utterance &u, double speed) {
    LogMelSpectrogram s(16, 20);
    const std::uint64_t seed = std::hash<std::string>{}(u.id) ^ static_cast<std::uint64_t>(speed * 1000);
    Rng rng(seed);
    for (auto &x : s.data) x = static_cast<float>(rng.Normal());
    return s;
  };
}

AugmentPolicy SmallPolicy() {
  AugmentPolicy p;
  p.spec.F = 4;
  p.spec.T_max = 5;
  return p;
}

TEST(SpeedPerturbTest, UnitFactorLeavesFeatures) {
  FeatureConfig c;
  c.target_dur_s = 0.5;
  Waveform w;
  for (int i = 0; i < 8000; ++i) w.samples.push_back(0.3 * std::sin(i * 0.07) + 0.1 * std::sin(i * 0.31));
  auto a = LogMel(w, c), b = LogMel(SpeedPerturb(w, 1.0), c);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-6);
}

TEST(SpeedPerturbTest, SlowDownLengthensThenTruncates) {
  Waveform w;
  w.samples.assign(120000, 0.2);
  auto slow = SpeedPerturb(w, 0.9);
  EXPECT_NEAR(slow.duration_s(), 7.5 / 0.9, 1e-3);
  EXPECT_EQ(PadOrTruncate(slow, 7.5).size(), 120000u);
}

TEST(SpecAugmentTest, ZeroWidthsAreIdentity) {
  auto s = RandomSpec(32, 40, 1);
  SpecAugmentParams p;
  p.F = 0;
  p.T_max = 0;
  Rng rng(2);
  EXPECT_EQ(SpecAugment(s, p, rng), s);
}

TEST(SpecAugmentTest, ForcedFrequencyMask) {
  auto s = RandomSpec(128, 30, 3);
  auto out = ApplySpecMasks(s, {{true, 5, 10}}, -7.0f);
  int untouched_rows = 0;
  for (int m = 0; m < 128; ++m) {
    bool same = true;
    for (int t = 0; t < 30; ++t) {
      if (m >= 5 && m < 15) {
        EXPECT_EQ(out.at(m, t), -7.0f);
      } else {
        same = same && out.at(m, t) == s.at(m, t);
      }
    }
    if (m < 5 || m >= 15) untouched_rows += same;
  }
  EXPECT_EQ(untouched_rows, 118);
}

TEST(SpecAugmentTest, MaskBoundsOverManyDraws) {
  SpecAugmentParams p;
  p.F = 27;
  p.T_max = 100;
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    for (const auto &m : DrawSpecMasks(p, 128, 747, rng)) {
      const int axis = m.frequency ? 128 : 747;
      EXPECT_GE(m.start, 0);
      EXPECT_LE(m.start + m.width, axis);
      EXPECT_LE(m.width, m.frequency ? p.F : p.T_max);
    }
  }
}

TEST(SpecAugmentTest, UnmaskedCellsUntouchedAndInputKept) {
  auto s = RandomSpec(32, 40, 4);
  const auto copy = s;
  SpecAugmentParams p;
  p.F = 8;
  p.T_max = 10;
  Rng rng(5);
  std::vector<SpecMask> masks;
  auto out = SpecAugment(s, p, rng, &masks);
  EXPECT_EQ(s, copy);
  for (int m = 0; m < 32; ++m)
    for (int t = 0; t < 40; ++t) {
      bool masked = false;
      for (const auto &k : masks)
        masked |= k.frequency ? (m >= k.start && m < k.start + k.width) : (t >= k.start && t < k.start + k.width);
      if (!masked) {
        EXPECT_EQ(out.at(m, t), s.at(m, t));
      }
    }
}

TEST(SpecAugmentTest, RejectsOversizedParams) {
  SpecAugmentParams p;
  p.F = 40;
  EXPECT_THROW(p.Validate(32, 100), ValidationError);
  p.F = 4;
  p.T_max = 200;
  EXPECT_THROW(p.Validate(32, 100), ValidationError);
}

TEST(MixupTest, LambdaOneIsFirstInput) {
  auto a = Labeled(Emotion::kAngry, 1), b = Labeled(Emotion::kSad, 2);
  auto m = Mixup(a, b, 1.0);
  EXPECT_EQ(m.features, a.features);
  EXPECT_EQ(*m.emotion, *a.emotion);
  EXPECT_EQ(m.aug_type, AugmentationType::kMixup);
}

TEST(MixupTest, HalfAngryHalfSad) {
  auto m = Mixup(Labeled(Emotion::kAngry, 1), Labeled(Emotion::kSad, 2), 0.5);
  SoftLabel want{0.5f, 0.0f, 0.0f, 0.5f};
  EXPECT_EQ(*m.emotion, want);
  EXPECT_EQ(m.HardLabel(), -1);
}

TEST(MixupTest, ConvexHull) {
  auto a = Labeled(Emotion::kHappy, 3), b = Labeled(Emotion::kNeutral, 4);
  Rng rng(9);
  for (int r = 0; r < 20; ++r) {
    const double lam = rng.Uniform();
    auto m = Mixup(a, b, lam);
    for (std::size_t i = 0; i < m.features.data.size(); ++i) {
      EXPECT_GE(m.features.data[i], std::min(a.features.data[i], b.features.data[i]));
      EXPECT_LE(m.features.data[i], std::max(a.features.data[i], b.features.data[i]));
    }
  }
}

TEST(MixupTest, Errors) {
  auto a = Labeled(Emotion::kHappy, 3), b = Labeled(Emotion::kNeutral, 4);
  b.features = RandomSpec(8, 7, 1);
  EXPECT_THROW(Mixup(a, b, 0.5), ValidationError);
  b = Labeled(Emotion::kNeutral, 4);
  b.emotion.reset();
  EXPECT_THROW(Mixup(a, b, 0.5), ValidationError);
}

TEST(BuildAugmentedSetTest, HistogramOnHundredUtterances) {
  auto set = BuildAugmentedSet(LabeledCorpus(100), SmallPolicy(), FakeSource(), Rng(1));
  ASSERT_EQ(set.size(), 500u);
  std::map<AugmentationType, int> h;
  for (const auto &s : set) ++h[s.aug_type];
  EXPECT_EQ(h[AugmentationType::kNone], 100);
  EXPECT_EQ(h[AugmentationType::kSpeed], 200);
  EXPECT_EQ(h[AugmentationType::kSpecAugment], 100);
  EXPECT_EQ(h[AugmentationType::kMixup], 100);
  std::set<int> aux;
  for (const auto &s : set) aux.insert(SmallPolicy().AuxLabel(s.aug_type));
  EXPECT_EQ(aux.size(), 4u);
}

TEST(BuildAugmentedSetTest, MixupOnlyArmIsBinary) {
  auto p = AugmentPolicy::Single(AugmentationType::kMixup);
  EXPECT_EQ(p.NumAuxClasses(), 2);
  auto set = BuildAugmentedSet(LabeledCorpus(10), p, FakeSource(), Rng(1));
  ASSERT_EQ(set.size(), 20u);
  for (const auto &s : set) {
    EXPECT_TRUE(s.aug_type == AugmentationType::kNone || s.aug_type == AugmentationType::kMixup);
    EXPECT_EQ(p.AuxLabel(s.aug_type), s.aug_type == AugmentationType::kNone ? 0 : 1);
  }
}

TEST(BuildAugmentedSetTest, UnlabeledNeverMixed) {
  auto set = BuildAugmentedSet(LabeledCorpus(6, 4), SmallPolicy(), FakeSource(), Rng(2));
  std::set<std::string> unlabeled{"u6", "u7", "u8", "u9"};
  for (const auto &s : set) {
    if (s.aug_type == AugmentationType::kMixup) {
      EXPECT_TRUE(s.labeled());
      for (const auto &id : s.source_ids) EXPECT_EQ(unlabeled.count(id), 0u) << id;
    }
    if (unlabeled.count(s.source_ids.front())) {
      EXPECT_FALSE(s.labeled());
    }
  }
}

TEST(BuildAugmentedSetTest, DeterministicAndNeedsTwoLabeled) {
  auto a = BuildAugmentedSet(LabeledCorpus(8), SmallPolicy(), FakeSource(), Rng(5));
  auto b = BuildAugmentedSet(LabeledCorpus(8), SmallPolicy(), FakeSource(), Rng(5));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].features, b[i].features);
    EXPECT_EQ(a[i].source_ids, b[i].source_ids);
  }
  EXPECT_THROW(BuildAugmentedSet(LabeledCorpus(1, 3), SmallPolicy(), FakeSource(), Rng(5)), ProtocolError);
}

TEST(AugmentationTypeTest, NamesRoundTrip) {
  for (int t = 0; t < kNumAugmentationTypes; ++t) {
    auto a = static_cast<AugmentationType>(t);
    EXPECT_EQ(ParseAugmentationType(AugmentationTypeName(a)), a);
  }
  EXPECT_THROW(ParseAugmentationType("pitch"), ValidationError);
}

}  // namespace
}  // namespace mtlaug
