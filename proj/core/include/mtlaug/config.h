// core/include/mtlaug/config.h

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

// Experiment configuration: one JSON document holding every knob of a run.
// Parsing is strict (unknown keys and wrong types are errors that name the
// field path) so a typo never silently falls back to a default.

#ifndef MTLAUG_CONFIG_H_
#define MTLAUG_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtlaug/augment.h"
#include "mtlaug/dsp.h"
#include "mtlaug/model.h"
#include "mtlaug/synth.h"
#include "mtlaug/train.h"

namespace mtlaug {

/// Either a manifest on disk or a synthetic corpus rendered on demand.
struct CorpusSource {
  std::string manifest;
  bool merge_excited_into_happy = false;
  SynthConfig synth;
  bool is_synthetic() const { return manifest.empty(); }
  bool operator==(const CorpusSource &) const = default;
};

struct ProtocolConfig {
  int n_repeats = 10;
  /// Cross-corpus validation share of the target corpus.
  double val_fraction = 0.3;
  bool speaker_disjoint_split = false;
  std::vector<double> snrs{0.0, 10.0, 20.0};
  double epsilon = 0.08;
  int bim_steps = 10;
  /// 0 means epsilon / bim_steps.
  double bim_step_size = 0.0;
  std::vector<double> fractions{0.25, 0.5, 0.75, 1.0};
  /// Label-fraction study: the unused labeled data joins the unlabeled pool.
  bool fraction_remainder_unlabeled = true;
  /// Limit on LOSO folds per repeat; 0 runs all of them.
  int max_folds = 0;
  bool operator==(const ProtocolConfig &) const = default;
};

struct ExperimentConfig {
  std::string name = "mtlaug";
  CorpusSource corpus;
  /// Cross-corpus target; by default a synthetic corpus with shifted
  /// prototypes and a disjoint speaker pool.
  CorpusSource target = DefaultTarget();
  /// Optional extra unlabeled pool.
  std::optional<CorpusSource> unlabeled;
  /// Directory of noise WAVs; empty selects synthetic coloured noise.
  std::string noise_dir;
  FeatureConfig features;
  AugmentPolicy policy;
  ModelConfig model;
  TrainConfig train;
  ProtocolConfig protocol;
  std::uint64_t seed = 1;

  static CorpusSource DefaultTarget();

  /// Throws ConfigError naming the field.
  void Validate() const;
  /// Model config with the input shape taken from the feature config.
  ModelConfig ResolvedModel() const;

  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json &j);
  /// FNV-1a over the canonical JSON dump, 16 hex digits.
  std::string Hash() const;
  bool operator==(const ExperimentConfig &) const = default;
};

/// Reads a JSON config file. Throws ConfigError on schema violations.
ExperimentConfig LoadExperimentConfig(const std::filesystem::path &path);

/// Applies `key.path=value` to a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise.
void ApplyOverride(nlohmann::json &doc, const std::string &assignment);

nlohmann::json ToJson(const FeatureConfig &c);
nlohmann::json ToJson(const ModelConfig &c);
nlohmann::json ToJson(const TrainConfig &c);
nlohmann::json ToJson(const AugmentPolicy &c);
nlohmann::json ToJson(const SynthConfig &c);
nlohmann::json ToJson(const CorpusSource &c);
nlohmann::json ToJson(const ProtocolConfig &c);
ModelConfig ModelConfigFromJson(const nlohmann::json &j, const std::string &path = "model");

}  // namespace mtlaug

#endif  // MTLAUG_CONFIG_H_
