// core/include/mtlaug/train.h

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

#ifndef MTLAUG_TRAIN_H_
#define MTLAUG_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtlaug/ad/adam.h"
#include "mtlaug/augment.h"
#include "mtlaug/corpus.h"
#include "mtlaug/features.h"
#include "mtlaug/model.h"

namespace mtlaug {

struct TrainConfig {
  double lr = 1e-4;
  /// Training halts once a halving takes lr below this.
  double min_lr = 1e-5;
  double lr_factor = 0.5;
  /// Epochs without validation improvement before halving.
  int patience = 5;
  int max_epochs = 200;
  int batch_size = 32;
  /// Unlabeled batches after each labeled batch.
  int unlabeled_per_labeled = 1;
  /// Validation metric: UAR, or overall accuracy when false.
  bool val_metric_uar = true;
  /// Equal validation metrics are ranked by validation cross-entropy.
  bool val_loss_tiebreak = true;
  /// Rebuild augmented copies every epoch instead of once per run.
  bool regenerate_augmentations = false;

  void Validate() const;
  bool operator==(const TrainConfig &) const = default;
};

struct MtlLossBreakdown {
  double l_mt = 0, l_pri = 0, l_s = 0, l_c = 0;
  double l_aux = 0, l_augtype = 0, l_recon = 0;
  double lambda1 = 0, lambda2 = 0;
};

enum class BatchMode { kLabeled, kUnlabeled };

/// Loss graph for one batch. `total` is undefined when nothing trainable is
/// reachable (an unlabeled batch with lambda1 = 0).
struct MtlLossGraph {
  ad::Tensor<float> total;
  MtlLossBreakdown breakdown;
  std::vector<float> center_deltas;
  /// Parameter groups that receive gradients.
  std::set<std::string> groups;
  /// Auxiliary predictions, for accuracy bookkeeping.
  std::vector<int> aux_predicted, aux_truth;
};

/// Assembles the multitask loss. Labeled mode: every term. Unlabeled mode:
/// only the auxiliary terms; the emotion classifier is not touched. Throws
/// UsageError if the batch mixes labeled and unlabeled samples or does not
/// match `mode`.
MtlLossGraph BuildMtlLoss(const Model &model, std::span<const AugmentedSample *const> batch,
                          BatchMode mode, const AugmentPolicy &policy, bool train, Rng *rng);

MtlLossBreakdown MtlLoss(const Model &model, std::span<const AugmentedSample *const> batch,
                         BatchMode mode, const AugmentPolicy &policy);

/// Backward + Adam over the groups the loss reaches, then centre update in
/// labeled mode.
MtlLossBreakdown TrainStep(Model &model, ad::Adam &optimizer,
                           std::span<const AugmentedSample *const> batch, BatchMode mode,
                           const AugmentPolicy &policy, Rng &rng);

struct ScheduleState {
  double lr = 1e-4;
  /// -1 until the first observation.
  double best_val = -1.0;
  int best_epoch = -1;
  /// Validation cross-entropy at best_epoch; breaks UAR ties.
  double best_loss = std::numeric_limits<double>::max();
  int epochs_since_improve = 0;
  int halvings = 0;
  bool halt = false;
  bool operator==(const ScheduleState &) const = default;
};

enum class ScheduleEvent { kImproved, kNoChange, kHalved, kHalted };
const char *ScheduleEventName(ScheduleEvent e);

/// Halve-on-plateau. A strictly better value resets the counter; after
/// `patience` epochs without one, lr is multiplied by `factor` and the
/// caller restores the best snapshot; once lr drops below `min_lr` the run
/// halts.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, double min_lr, int patience, double factor = 0.5);
  /// An epoch improves if `val` beats the best, or ties it while `val_loss`
  /// (when given) drops by more than a relative 1e-3.
  ScheduleEvent Observe(int epoch, double val,
                        double val_loss = std::numeric_limits<double>::quiet_NaN());
  const ScheduleState &state() const { return state_; }
  void set_state(const ScheduleState &s) { state_ = s; }

 private:
  double min_lr_, factor_;
  int patience_;
  ScheduleState state_;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0;
  MtlLossBreakdown labeled;
  MtlLossBreakdown unlabeled;
  int labeled_steps = 0;
  int unlabeled_steps = 0;
  double aux_train_accuracy = -1;
  double val_uar = 0;
  double val_loss = 0;
  std::string event;
};

struct StepRecord {
  int epoch = 0;
  int step = 0;
  BatchMode mode = BatchMode::kLabeled;
  MtlLossBreakdown loss;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
  int best_epoch = -1;
  double best_val_uar = -1;

  /// epoch,lr,l_mt,l_pri,l_s,l_c,l_augtype,l_recon,val_uar
  std::string LabeledCsv() const;
  /// epoch,lr,l_mt,l_aux,l_augtype,l_recon,steps
  std::string UnlabeledCsv() const;
  nlohmann::json ToJson() const;
  static History FromJson(const nlohmann::json &j);
};

struct FitOptions {
  /// Written after every epoch when set.
  std::optional<std::filesystem::path> checkpoint;
  /// Continue from `checkpoint` if it exists.
  bool resume = false;
  /// Stop (as if interrupted) once this many epochs are complete; <= 0 off.
  int stop_after_epochs = 0;
  /// Embedded in checkpoints and checked on resume.
  std::string config_hash;
  bool keep_step_records = true;
};

struct FitResult {
  std::unique_ptr<Model> model;
  History history;
  bool interrupted = false;
  int epochs_run = 0;
};

/// Trains on `train` (labeled rows) with optional unlabeled data (the
/// unlabeled rows of `train` plus `unlabeled`), selecting on `val`. Returns
/// the best-validation model. Throws ProtocolError on empty splits.
FitResult Fit(const Corpus &train, const Corpus &val, const Corpus *unlabeled,
              const ModelConfig &model_config, const TrainConfig &train_config,
              const AugmentPolicy &policy, FeatureBank &bank, std::uint64_t seed,
              const FitOptions &options = {});

/// Aux-classifier accuracy over `samples` (eval mode).
double AugTypeAccuracy(const Model &model, const std::vector<AugmentedSample> &samples,
                       const AugmentPolicy &policy, std::size_t batch_size = 32);

/// Standalone model file: config, weights, centres and input statistics.
void SaveModel(const Model &model, const std::filesystem::path &path,
               const std::string &config_hash = "");
std::unique_ptr<Model> LoadModel(const std::filesystem::path &path);

}  // namespace mtlaug

#endif  // MTLAUG_TRAIN_H_
