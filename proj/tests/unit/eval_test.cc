// tests/unit/eval_test.cc

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

#include <set>

#include "mtlaug/error.h"
#include "mtlaug/eval.h"
#include "mtlaug/metrics.h"
#include "test_support.h"

namespace mtlaug {
namespace {

ExperimentConfig TinyExperiment() {
  ExperimentConfig c;
  c.corpus.synth.n_speakers = 3;
  c.corpus.synth.utterances_per_speaker_per_class = 3;
  c.corpus.synth.duration_s = 0.25;
  c.target.synth.n_speakers = 2;
  c.target.synth.utterances_per_speaker_per_class = 3;
  c.target.synth.duration_s = 0.25;
  c.features.n_mels = 12;
  c.features.target_dur_s = 0.2;
  c.policy.spec.F = 3;
  c.policy.spec.T_max = 4;
  c.model.encoder = {{5, 4, 2}, {3, 6, 2}};
  c.model.ce_units = 6;
  c.model.ce_dense = 8;
  c.model.ca_units = 6;
  c.model.ca_dense = 8;
  c.train.lr = 1e-3;
  c.train.max_epochs = 2;
  c.train.batch_size = 8;
  c.protocol.n_repeats = 1;
  c.protocol.snrs = {0.0, 10.0, 20.0};
  return c;
}

class EvalFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    config_ = TinyExperiment();
    corpus_ = MaterializeCorpus(config_.corpus, dir_.path());
    target_ = MaterializeCorpus(config_.target, dir_.path());
  }
  std::unique_ptr<Model> Untrained(std::uint64_t seed) {
    auto m = std::make_unique<Model>(config_.ResolvedModel(), seed);
    return m;
  }

  testing::TempDir dir_{"eval"};
  ExperimentConfig config_;
  Corpus corpus_{"c", {}}, target_{"t", {}};
  FeatureBank bank_{TinyExperiment().features};
};

TEST(UarTest, HandExamples) {
  ConfusionMatrix perfect(4);
  for (int k = 0; k < 4; ++k) perfect.Add(k, k, 5);
  EXPECT_DOUBLE_EQ(Uar(perfect), 1.0);
  EXPECT_DOUBLE_EQ(Uar(ConfusionMatrix::FromRows({{8, 2}, {5, 5}})), 0.65);
  EXPECT_THROW(Uar(ConfusionMatrix(4)), ValidationError);
}

TEST(UarTest, PermutationInvariant) {
  auto cm = ConfusionMatrix::FromRows({{5, 1, 0, 2}, {1, 7, 1, 0}, {0, 3, 4, 1}, {2, 0, 0, 9}});
  const int perm[4] = {2, 0, 3, 1};
  ConfusionMatrix p(4);
  auto rows = cm.Rows();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) p.Add(perm[i], perm[j], rows[i][j]);
  EXPECT_DOUBLE_EQ(Uar(cm), Uar(p));
}

TEST(UarTest, RandomPredictionsNearChance) {
  Rng rng(3);
  ConfusionMatrix cm(4);
  for (int i = 0; i < 40000; ++i) cm.Add(i % 4, static_cast<int>(rng.UniformInt(0, 3)));
  EXPECT_NEAR(Uar(cm), 0.25, 0.01);
}

TEST(ProtocolTest, CheckDisjointAndSubsample) {
  std::vector<Utterance> u;
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < 8; ++i)
      u.push_back({"s" + std::to_string(s) + "_" + std::to_string(i), "x.wav", "s" + std::to_string(s),
                   static_cast<Emotion>(i % 4), "t"});
  Corpus all("c", u);
  Corpus a = all.Subset({0, 1, 2}), b = all.Subset({2, 3});
  EXPECT_THROW(CheckDisjoint({&a, &b}), ProtocolError);
  Corpus c = all.Subset({3, 4});
  EXPECT_NO_THROW(CheckDisjoint({&a, &c}));

  auto half = SubsampleLabels(all, 0.5, 9, true);
  EXPECT_EQ(half.size(), 16u);
  EXPECT_EQ(half.CountLabeled(), 8u);
  auto dropped = SubsampleLabels(all, 0.25, 9, false);
  EXPECT_EQ(dropped.size(), 8u);
  EXPECT_EQ(SubsampleLabels(all, 1.0, 9, true).CountLabeled(), 16u);
}

TEST(ReportTest, JsonRoundTripAndCsv) {
  ExperimentReport r;
  r.protocol = "loso";
  r.config_hash = "abc";
  r.seed = 3;
  r.n_repeats = 1;
  ArmReport arm;
  arm.name = "clean";
  RepeatResult rep;
  rep.seed = 3;
  FoldResult f;
  f.fold = "spk0";
  f.confusion = ConfusionMatrix::FromRows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  f.uar = 1.0;
  rep.folds.push_back(f);
  arm.repeats.push_back(rep);
  arm.Finalize();
  r.arms.push_back(arm);
  auto back = ExperimentReport::FromJson(r.ToJson());
  EXPECT_EQ(back.ToJson(), r.ToJson());
  EXPECT_EQ(r.Csv().rfind("protocol,arm,repeat,fold,uar\n", 0), 0u);
  EXPECT_NE(r.Csv().find("loso,clean,0,spk0,1.000000"), std::string::npos);
  EXPECT_THROW(ExperimentReport::FromJson(nlohmann::json::array()), FormatError);
}

TEST_F(EvalFixture, MaterializeIsCachedAndDeterministic) {
  auto again = MaterializeCorpus(config_.corpus, dir_.path());
  EXPECT_EQ(again.size(), corpus_.size());
  EXPECT_EQ(corpus_.size(), 36u);
  CorpusSource missing;
  missing.manifest = (dir_.path() / "absent.csv").string();
  EXPECT_THROW(MaterializeCorpus(missing, dir_.path()), MissingCorpusError);
}

TEST_F(EvalFixture, UntrainedModelIsNearChance) {
  double total = 0;
  for (std::uint64_t s = 1; s <= 5; ++s) total += Uar(EvaluateModel(*Untrained(s), corpus_, bank_));
  EXPECT_NEAR(total / 5, 0.25, 0.1);
}

TEST_F(EvalFixture, LosoReportShape) {
  auto rep = LosoEvaluate(corpus_, nullptr, config_, bank_);
  EXPECT_EQ(rep.protocol, "loso");
  ASSERT_EQ(rep.arms.size(), 1u);
  EXPECT_EQ(rep.arms[0].name, "clean");
  ASSERT_EQ(rep.arms[0].repeats.size(), 1u);
  EXPECT_EQ(rep.arms[0].repeats[0].folds.size(), 3u);
  EXPECT_EQ(rep.models.size(), 3u);
  EXPECT_EQ(rep.config_hash, config_.Hash());
}

TEST_F(EvalFixture, FullFractionEqualsPlainLoso) {
  auto c = config_;
  c.protocol.fractions = {1.0};
  auto study = StudyLabelFraction(corpus_, nullptr, c, bank_);
  auto plain = LosoEvaluate(corpus_, nullptr, c, bank_);
  EXPECT_EQ(study.Arm("fraction=1").mean, plain.Arm("clean").mean);
}

TEST_F(EvalFixture, CrossCorpusDirectionAndSameCorpus) {
  auto rep = CrossCorpusEvaluate(corpus_, target_, nullptr, config_, bank_, "A->B");
  ASSERT_EQ(rep.arms.size(), 1u);
  EXPECT_EQ(rep.arms[0].name, "A->B");
  EXPECT_EQ(rep.meta["direction"], "A->B");
  auto same = CrossCorpusEvaluate(corpus_, corpus_, nullptr, config_, bank_, "A->A");
  EXPECT_TRUE(same.meta["within"].get<bool>());
  EXPECT_GT(same.models.at(0).n_train, 0u);
  EXPECT_EQ(same.models.at(0).n_train + same.models.at(0).n_val + same.models.at(0).n_test, corpus_.size());
}

TEST_F(EvalFixture, NoisyEvaluateArms) {
  auto m = Untrained(2);
  auto pool = LoadNoisePool("", 1, 16000);
  EXPECT_EQ(pool.size(), 4u);
  auto r = NoisyEvaluate(*m, corpus_, pool, {0.0, 10.0, 20.0, kCleanSnr}, bank_, 5);
  EXPECT_EQ(r.size(), 4u);
  EXPECT_EQ(r.at(kCleanSnr), EvaluateModel(*m, corpus_, bank_));
  EXPECT_THROW(NoisyEvaluate(*m, corpus_, {}, {0.0}, bank_, 5), ProtocolError);
  EXPECT_EQ(SnrArmName(kCleanSnr), "clean");
  EXPECT_EQ(SnrArmName(10.0), "snr=10");
}

TEST_F(EvalFixture, AdversarialZeroEpsilonAndRows) {
  auto m = Untrained(3);
  AttackParams f, b;
  f.epsilon = 0.0;
  b.kind = AttackKind::kBim;
  b.epsilon = 0.0;
  auto r = AdversarialEvaluate(*m, corpus_, bank_, {f, b});
  EXPECT_EQ(r.attacked.size(), 2u);
  EXPECT_EQ(r.attacked.at("fgsm"), r.clean);
  EXPECT_EQ(r.attacked.at("bim"), r.clean);
  EXPECT_EQ(r.max_linf, 0.0);
}

TEST_F(EvalFixture, AugmentationStudyHasFourArms) {
  auto c = config_;
  c.protocol.max_folds = 1;
  auto rep = StudyAugmentation(corpus_, nullptr, c, bank_);
  std::set<std::string> names;
  for (const auto &a : rep.arms) names.insert(a.name);
  EXPECT_EQ(names, (std::set<std::string>{"speed", "specaugment", "mixup", "all"}));
}

TEST_F(EvalFixture, AblationRowsAndTable) {
  for (int row = 1; row <= 5; ++row) {
    auto c = WithAblationRow(config_, row);
    EXPECT_NO_THROW(c.Validate());
    if (row > 1) {
      EXPECT_FALSE(c.policy.Includes(AugmentationType::kMixup));
    }
  }
  auto c = config_;
  c.protocol.max_folds = 1;
  c.train.max_epochs = 1;
  auto rep = StudyAblation(corpus_, target_, nullptr, c, bank_);
  EXPECT_EQ(rep.arms.size(), 10u);
  auto table = AblationTable(rep);
  EXPECT_EQ(table.rfind("model,aux_augtype,aux_recon,center_loss,attention,within,cross\n", 0), 0u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
}

}  // namespace
}  // namespace mtlaug
