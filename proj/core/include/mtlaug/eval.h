// core/include/mtlaug/eval.h

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

// Evaluation protocols and studies. Every protocol trains one model per
// (repeat, fold) task; repeat r uses seed config.seed + r while the data
// splits stay fixed by the protocol. Tasks run on up to `jobs` threads and
// share nothing mutable except the feature bank.

#ifndef MTLAUG_EVAL_H_
#define MTLAUG_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtlaug/attack.h"
#include "mtlaug/config.h"
#include "mtlaug/corpus.h"
#include "mtlaug/features.h"
#include "mtlaug/metrics.h"
#include "mtlaug/model.h"
#include "mtlaug/train.h"

namespace mtlaug {

/// SNR sentinel for the clean condition.
inline constexpr double kCleanSnr = std::numeric_limits<double>::infinity();

struct FoldResult {
  std::string fold;
  ConfusionMatrix confusion;
  double uar = 0.0;
};

struct RepeatResult {
  int repeat = 0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  /// Pooled over folds.
  ConfusionMatrix confusion;
  double uar = 0.0;
};

struct ArmReport {
  std::string name;
  std::vector<RepeatResult> repeats;
  double mean = 0.0;
  /// Sample standard deviation over the repeat UARs.
  double std = 0.0;
  /// Arm-specific scalars (e.g. auxiliary accuracy), averaged over tasks.
  std::map<std::string, double> extras;

  void Finalize();
};

/// One trained model.
struct ModelProvenance {
  std::string arm;
  int repeat = 0;
  std::string fold;
  std::uint64_t seed = 0;
  std::string validation;
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  int epochs = 0;
  int best_epoch = -1;
  double best_val = 0.0;
  std::uint64_t checksum = 0;
};

struct ExperimentReport {
  std::string protocol;
  std::string config_hash;
  std::uint64_t seed = 0;
  int n_repeats = 0;
  std::vector<ArmReport> arms;
  std::vector<ModelProvenance> models;
  double wall_clock_s = 0.0;
  nlohmann::json meta = nlohmann::json::object();

  const ArmReport &Arm(const std::string &name) const;
  ArmReport *FindArm(const std::string &name);

  nlohmann::json ToJson() const;
  static ExperimentReport FromJson(const nlohmann::json &j);
  /// `protocol,arm,repeat,fold,uar`, deterministic given config and seed.
  std::string Csv() const;
};

/// Loads a manifest corpus (MissingCorpusError if absent) or renders a
/// synthetic one under `cache_root/corpora/<hash>`, reusing earlier renders.
Corpus MaterializeCorpus(const CorpusSource &source, const std::filesystem::path &cache_root);

/// Confusion of `model` over the labeled utterances of `test`.
ConfusionMatrix EvaluateModel(const Model &model, const Corpus &test, FeatureBank &bank,
                              std::size_t batch_size = 32);
ConfusionMatrix EvaluateFeatures(const Model &model,
                                 const std::vector<const LogMelSpectrogram *> &specs,
                                 const std::vector<int> &labels, std::size_t batch_size = 32);

/// Ablation row 1..5 applied to a config; rows without the augmentation
/// classifier train on originals only.
ExperimentConfig WithAblationRow(const ExperimentConfig &config, int row);

/// Throws ProtocolError if any utterance id occurs in more than one split.
void CheckDisjoint(const std::vector<const Corpus *> &splits);

/// Keeps round(fraction * n) labeled utterances per (speaker, class) cell;
/// the rest are returned as unlabeled copies when `remainder_unlabeled`,
/// dropped otherwise. fraction 1 returns the corpus unchanged.
Corpus SubsampleLabels(const Corpus &corpus, double fraction, std::uint64_t seed,
                       bool remainder_unlabeled);

/// Per-fold probe run on every trained model. It returns one confusion per
/// arm name and may record extras.
struct ProbeContext {
  const Model &model;
  const Corpus &test;
  FeatureBank &bank;
  std::uint64_t seed;
};
struct ProbeOutput {
  std::map<std::string, ConfusionMatrix> arms;
  std::map<std::string, double> extras;
};
using Probe = std::function<ProbeOutput(const ProbeContext &)>;

struct EvalOptions {
  int jobs = 1;
  /// Label fraction applied to each fold's training speakers.
  double label_fraction = 1.0;
  /// Arm name used by the default probe.
  std::string arm = "clean";
  /// Replaces the default clean probe.
  Probe probe;
  /// Skip corpus-level unlabeled pools.
  bool ignore_unlabeled = false;
};

ExperimentReport LosoEvaluate(const Corpus &corpus, const Corpus *unlabeled,
                              const ExperimentConfig &config, FeatureBank &bank,
                              const EvalOptions &options = {});

/// Trains on all of `source`, selects on a fixed val share of `target`,
/// tests on the rest. The arm is named after `direction`.
ExperimentReport CrossCorpusEvaluate(const Corpus &source, const Corpus &target,
                                     const Corpus *unlabeled, const ExperimentConfig &config,
                                     FeatureBank &bank, const std::string &direction,
                                     const EvalOptions &options = {});

/// Noise excerpts: WAVs under `noise_dir`, or synthetic coloured noise.
std::vector<Waveform> LoadNoisePool(const std::string &noise_dir, std::uint64_t seed,
                                    int sample_rate);

/// Confusion per SNR (kCleanSnr is the unmixed test set). Each utterance
/// gets a noise clip and offset drawn from `seed`.
std::map<double, ConfusionMatrix> NoisyEvaluate(const Model &model, const Corpus &test,
                                                const std::vector<Waveform> &noise_pool,
                                                const std::vector<double> &snrs,
                                                FeatureBank &bank, std::uint64_t seed);

struct AdversarialResult {
  ConfusionMatrix clean;
  std::map<std::string, ConfusionMatrix> attacked;
  double max_linf = 0.0;
};
AdversarialResult AdversarialEvaluate(const Model &model, const Corpus &test, FeatureBank &bank,
                                      const std::vector<AttackParams> &attacks,
                                      std::size_t batch_size = 32);

std::string SnrArmName(double snr);

/// LOSO with clean plus per-SNR arms.
ExperimentReport NoiseProtocol(const Corpus &corpus, const Corpus *unlabeled,
                               const ExperimentConfig &config, FeatureBank &bank,
                               const EvalOptions &options = {});
/// LOSO with clean, fgsm and bim arms.
ExperimentReport AttackProtocol(const Corpus &corpus, const Corpus *unlabeled,
                                const ExperimentConfig &config, FeatureBank &bank,
                                const EvalOptions &options = {});

/// Arms speed, specaugment, mixup (binary auxiliary task) and all.
ExperimentReport StudyAugmentation(const Corpus &corpus, const Corpus *unlabeled,
                                   const ExperimentConfig &config, FeatureBank &bank,
                                   const EvalOptions &options = {});
/// One arm per label fraction, named "fraction=<f>".
ExperimentReport StudyLabelFraction(const Corpus &corpus, const Corpus *unlabeled,
                                    const ExperimentConfig &config, FeatureBank &bank,
                                    const EvalOptions &options = {});
/// Rows 1..5 on the within (LOSO) and cross protocols; arms "row<r>/within"
/// and "row<r>/cross".
ExperimentReport StudyAblation(const Corpus &corpus, const Corpus &target,
                               const Corpus *unlabeled, const ExperimentConfig &config,
                               FeatureBank &bank, const EvalOptions &options = {});

/// Columns model,aux_augtype,aux_recon,center_loss,attention,within,cross
/// (percent, mean+-std).
std::string AblationTable(const ExperimentReport &ablation);
/// fraction,mean,std for the label-fraction study.
std::string FractionCurve(const ExperimentReport &study);
/// arm,mean,std for any report.
std::string ArmSummary(const ExperimentReport &report);

}  // namespace mtlaug

#endif  // MTLAUG_EVAL_H_
