// tests/unit/train_test.cc

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

#include "mtlaug/error.h"
#include "mtlaug/synth.h"
#include "mtlaug/train.h"
#include "test_support.h"

namespace mtlaug {
namespace {

ModelConfig TinyConfig() {
  ModelConfig c;
  c.input_mels = 12;
  c.input_frames = 17;
  c.encoder = {{5, 4, 2}, {3, 6, 2}};
  c.ce_units = 6;
  c.ce_dense = 8;
  c.ca_units = 6;
  c.ca_dense = 8;
  return c;
}

FeatureConfig TinyFeatures() {
  FeatureConfig f;
  f.n_mels = 12;
  f.target_dur_s = 0.2;
  return f;
}

AugmentPolicy TinyPolicy() {
  AugmentPolicy p;
  p.spec.F = 3;
  p.spec.T_max = 4;
  return p;
}

AugmentedSample Sample(std::uint64_t seed, std::optional<Emotion> e, AugmentationType t) {
  Rng rng(seed);
  AugmentedSample s;
  s.features = LogMelSpectrogram(12, 17);
  for (auto &x : s.features.data) x = static_cast<float>(rng.Normal());
  if (e) s.emotion = OneHot(*e);
  s.aug_type = t;
  s.source_ids = {"u" + std::to_string(seed)};
  s.speaker_id = "s";
  return s;
}

std::vector<AugmentedSample> LabeledBatch() {
  std::vector<AugmentedSample> v;
  for (int i = 0; i < 6; ++i)
    v.push_back(Sample(i, static_cast<Emotion>(i % 4), static_cast<AugmentationType>(i % 3)));
  auto mixed = Mixup(v[0], v[3], 0.3);
  v.push_back(mixed);
  return v;
}

std::vector<AugmentedSample> UnlabeledBatch() {
  std::vector<AugmentedSample> v;
  for (int i = 0; i < 5; ++i) v.push_back(Sample(100 + i, std::nullopt, static_cast<AugmentationType>(i % 3)));
  return v;
}

std::vector<const AugmentedSample *> Ptrs(const std::vector<AugmentedSample> &v) {
  std::vector<const AugmentedSample *> p;
  for (const auto &s : v) p.push_back(&s);
  return p;
}

double LogSumExp(const float *z, int k) {
  double m = z[0];
  for (int j = 1; j < k; ++j) m = std::max(m, double(z[j]));
  double s = 0;
  for (int j = 0; j < k; ++j) s += std::exp(z[j] - m);
  return m + std::log(s);
}

TEST(MtlLossTest, LambdaOneZeroGivesPrimary) {
  auto c = TinyConfig();
  c.lambda1 = 0.0;
  Model m(c, 1);
  auto batch = LabeledBatch();
  auto b = MtlLoss(m, Ptrs(batch), BatchMode::kLabeled, TinyPolicy());
  EXPECT_EQ(b.l_mt, b.l_pri);
}

TEST(MtlLossTest, UnlabeledIsAuxiliaryOnly) {
  Model m(TinyConfig(), 2);
  auto batch = UnlabeledBatch();
  auto b = MtlLoss(m, Ptrs(batch), BatchMode::kUnlabeled, TinyPolicy());
  EXPECT_EQ(b.l_s, 0.0);
  EXPECT_EQ(b.l_c, 0.0);
  EXPECT_GT(b.l_aux, 0.0);
  EXPECT_NEAR(b.l_mt, m.config().lambda1 * b.l_aux, 1e-6);
}

TEST(MtlLossTest, MixedModeRejected) {
  Model m(TinyConfig(), 3);
  auto batch = LabeledBatch();
  batch.push_back(Sample(50, std::nullopt, AugmentationType::kNone));
  EXPECT_THROW(MtlLoss(m, Ptrs(batch), BatchMode::kLabeled, TinyPolicy()), UsageError);
  auto ub = UnlabeledBatch();
  ub.push_back(Sample(51, Emotion::kSad, AugmentationType::kNone));
  EXPECT_THROW(MtlLoss(m, Ptrs(ub), BatchMode::kUnlabeled, TinyPolicy()), UsageError);
}

TEST(MtlLossTest, HandComposedTotal) {
  Model m(TinyConfig(), 4);
  for (std::size_t i = 0; i < m.centers().size(); ++i) m.centers()[i] = 0.05f * static_cast<float>(i % 7);
  auto batch = LabeledBatch();
  const auto policy = TinyPolicy();
  auto b = MtlLoss(m, Ptrs(batch), BatchMode::kLabeled, policy);

  std::vector<const LogMelSpectrogram *> specs;
  for (const auto &s : batch) specs.push_back(&s.features);
  auto xn = m.Normalize(m.Input(specs));
  auto z = m.Encode(xn);
  auto seq = Model::Sequence(z);
  auto emo = m.ClassifyEmotion(seq);
  auto aux = m.ClassifyAugType(seq, false, nullptr);
  const std::size_t n = batch.size(), d = 8;

  double ls = 0, lc = 0, la = 0;
  int hard = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float *z4 = emo.logits.data().data() + 4 * i;
    const double lse = LogSumExp(z4, 4);
    for (int k = 0; k < 4; ++k) ls -= (*batch[i].emotion)[k] * (z4[k] - lse);
    const float *a4 = aux.data().data() + 4 * i;
    la -= a4[policy.AuxLabel(batch[i].aug_type)] - LogSumExp(a4, 4);
    const int y = batch[i].HardLabel();
    if (y < 0) continue;
    ++hard;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = emo.features.data()[i * d + j] - m.centers()[y * d + j];
      lc += diff * diff;
    }
  }
  ls /= n;
  la /= n;
  lc /= hard;
  const double lr = ad::SquaredError(m.Decode(z), xn).item();
  const auto &c = m.config();
  const double want = ls + c.lambda2 * lc + c.lambda1 * (c.w_augtype * la + c.w_recon * lr);
  EXPECT_NEAR(b.l_s, ls, 1e-5);
  EXPECT_NEAR(b.l_c, lc, 1e-5);
  EXPECT_NEAR(b.l_augtype, la, 1e-5);
  EXPECT_NEAR(b.l_recon, lr, 1e-5);
  EXPECT_NEAR(b.l_mt, want, 1e-5);
}

TEST(TrainStepTest, UnlabeledStepLeavesEmotionHead) {
  Model m(TinyConfig(), 5);
  ad::Adam adam(1e-3);
  Rng rng(1);
  const auto emo = m.Checksum({kGroupEmotion});
  const auto enc = m.Checksum({kGroupEncoder});
  const auto centers = m.centers();
  auto batch = UnlabeledBatch();
  TrainStep(m, adam, Ptrs(batch), BatchMode::kUnlabeled, TinyPolicy(), rng);
  EXPECT_EQ(m.Checksum({kGroupEmotion}), emo);
  EXPECT_EQ(m.centers(), centers);
  EXPECT_NE(m.Checksum({kGroupEncoder}), enc);
}

TEST(TrainStepTest, PrimaryOnlyStepTouchesEncoderAndEmotion) {
  auto c = TinyConfig();
  c.lambda1 = 0.0;
  c.lambda2 = 0.0;
  Model m(c, 6);
  ad::Adam adam(1e-3);
  Rng rng(1);
  const auto dec = m.Checksum({kGroupDecoder}), aug = m.Checksum({kGroupAugType});
  const auto enc = m.Checksum({kGroupEncoder}), emo = m.Checksum({kGroupEmotion});
  auto batch = LabeledBatch();
  TrainStep(m, adam, Ptrs(batch), BatchMode::kLabeled, TinyPolicy(), rng);
  EXPECT_EQ(m.Checksum({kGroupDecoder}), dec);
  EXPECT_EQ(m.Checksum({kGroupAugType}), aug);
  EXPECT_NE(m.Checksum({kGroupEncoder}), enc);
  EXPECT_NE(m.Checksum({kGroupEmotion}), emo);
}

TEST(ScheduleTest, StrictlyImprovingNeverHalves) {
  PlateauSchedule s(1e-4, 1e-5, 5);
  for (int e = 0; e < 30; ++e) EXPECT_EQ(s.Observe(e, 0.3 + 0.01 * e), ScheduleEvent::kImproved);
  EXPECT_EQ(s.state().halvings, 0);
  EXPECT_EQ(s.state().lr, 1e-4);
}

TEST(ScheduleTest, ConstantTraceHalvesEveryFiveAndHalts) {
  PlateauSchedule s(1e-4, 1e-5, 5);
  std::vector<int> halved;
  int halted_at = -1;
  for (int e = 0; e < 40 && halted_at < 0; ++e) {
    auto ev = s.Observe(e, 0.5);
    if (ev == ScheduleEvent::kHalved) halved.push_back(e);
    if (ev == ScheduleEvent::kHalted) halted_at = e;
  }
  EXPECT_EQ(halved, (std::vector<int>{5, 10, 15}));
  EXPECT_EQ(halted_at, 20);
  EXPECT_EQ(s.state().halvings, 4);
  EXPECT_DOUBLE_EQ(s.state().lr, 6.25e-6);
  EXPECT_TRUE(s.state().halt);
}

TEST(ScheduleTest, LossBreaksTies) {
  PlateauSchedule s(1e-4, 1e-5, 5);
  EXPECT_EQ(s.Observe(0, 1.0, 0.9), ScheduleEvent::kImproved);
  EXPECT_EQ(s.Observe(1, 1.0, 0.5), ScheduleEvent::kImproved);
  EXPECT_EQ(s.Observe(2, 1.0, 0.49999), ScheduleEvent::kNoChange);
  EXPECT_EQ(s.Observe(3, 1.0), ScheduleEvent::kNoChange);
  EXPECT_EQ(s.state().best_epoch, 1);
}

class FitTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthConfig sc;
    sc.n_speakers = 2;
    sc.utterances_per_speaker_per_class = 3;
    sc.duration_s = 0.2;
    corpus_ = SynthCorpus(sc, dir_.path() / "wav");
    std::vector<Utterance> tr, va;
    for (const auto &u : corpus_.utterances()) (u.speaker_id == corpus_.speakers()[0] ? tr : va).push_back(u);
    train_ = Corpus("c", tr);
    val_ = Corpus("c", va);
    tc_.lr = 1e-3;
    tc_.max_epochs = 6;
    tc_.batch_size = 4;
  }

  FitResult Run(const FitOptions &opt) {
    FeatureBank bank(TinyFeatures());
    return Fit(train_, val_, nullptr, TinyConfig(), tc_, TinyPolicy(), bank, 17, opt);
  }

  testing::TempDir dir_{"fit"};
  Corpus corpus_{"c", {}}, train_{"c", {}}, val_{"c", {}};
  TrainConfig tc_;
};

TEST_F(FitTest, InterruptAndResumeMatchesUninterrupted) {
  auto full = Run({});
  FitOptions opt;
  opt.checkpoint = dir_.path() / "ck.bin";
  opt.config_hash = "abc";
  opt.stop_after_epochs = 3;
  auto part = Run(opt);
  EXPECT_TRUE(part.interrupted);
  opt.stop_after_epochs = 0;
  opt.resume = true;
  auto rest = Run(opt);
  EXPECT_EQ(rest.model->Checksum(), full.model->Checksum());
  EXPECT_EQ(rest.model->centers(), full.model->centers());
  ASSERT_EQ(rest.history.epochs.size(), full.history.epochs.size());
  for (std::size_t e = 0; e < full.history.epochs.size(); ++e)
    EXPECT_EQ(rest.history.epochs[e].val_uar, full.history.epochs[e].val_uar);

  opt.config_hash = "other";
  EXPECT_THROW(Run(opt), ConfigMismatchError);
}

TEST_F(FitTest, SaveLoadBitIdentical) {
  auto r = Run({});
  SaveModel(*r.model, dir_.path() / "m.bin", "h");
  auto loaded = LoadModel(dir_.path() / "m.bin");
  EXPECT_EQ(loaded->Checksum(), r.model->Checksum());
  EXPECT_EQ(loaded->centers(), r.model->centers());
  EXPECT_EQ(loaded->norm_mean(), r.model->norm_mean());
  EXPECT_EQ(loaded->config(), r.model->config());
}

TEST_F(FitTest, EmptySplitRejected) {
  FeatureBank bank(TinyFeatures());
  EXPECT_THROW(Fit(Corpus("c", {}), val_, nullptr, TinyConfig(), tc_, TinyPolicy(), bank, 1), ProtocolError);
  EXPECT_THROW(Fit(train_, Corpus("c", {}), nullptr, TinyConfig(), tc_, TinyPolicy(), bank, 1), ProtocolError);
}

TEST(HistoryTest, JsonRoundTrip) {
  History h;
  EpochRecord e;
  e.epoch = 2;
  e.lr = 5e-5;
  e.val_uar = 0.75;
  e.val_loss = 0.6;
  e.labeled.l_mt = 1.25;
  e.event = "halved";
  h.epochs.push_back(e);
  h.best_epoch = 2;
  h.best_val_uar = 0.75;
  auto back = History::FromJson(h.ToJson());
  EXPECT_EQ(back.ToJson(), h.ToJson());
  EXPECT_NE(h.LabeledCsv().find("epoch,lr,l_mt"), std::string::npos);
}

}  // namespace
}  // namespace mtlaug
