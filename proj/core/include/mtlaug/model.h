// core/include/mtlaug/model.h

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

// Encoder E, decoder D, emotion classifier C_E and augmentation-type
// classifier C_A around a shared latent code.
//
//   x [B,1,M,T] -> normalise -> E (conv stack) -> Z [B,C,H,W]
//   Z -> sequence [B,W,C*H] -> C_E: BLSTM -> attention/mean pool -> dense
//                                  (ReLU, deep features) -> dense logits
//                           -> C_A: BLSTM final states -> dense, dropout,
//                                  dense -> dense logits
//   Z -> D (transposed convs) -> X_hat [B,1,M,T]

#ifndef MTLAUG_MODEL_H_
#define MTLAUG_MODEL_H_

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mtlaug/ad/layers.h"
#include "mtlaug/dsp.h"

namespace mtlaug {

inline const std::string kGroupEncoder = "encoder";
inline const std::string kGroupDecoder = "decoder";
inline const std::string kGroupEmotion = "emotion";
inline const std::string kGroupAugType = "augtype";

struct LatentShape {
  std::size_t channels = 0, height = 0, width = 0;
  std::size_t seq_len() const { return width; }
  std::size_t seq_dim() const { return channels * height; }
  bool operator==(const LatentShape &) const = default;
};

struct ModelConfig {
  int input_mels = 128;
  int input_frames = 747;
  std::vector<ad::ConvSpec> encoder{{7, 32, 2}, {3, 64, 2}, {3, 64, 1}, {3, 128, 1}};
  int ce_units = 128;
  int ce_dense = 128;
  int n_classes = 4;
  int ca_units = 256;
  int ca_dense = 128;
  double ca_dropout = 0.3;
  int n_aug_classes = 4;

  bool use_attention = true;
  bool use_center_loss = true;
  bool use_aux_augtype = true;
  bool use_aux_reconstruction = true;

  double lambda1 = 0.5;
  double lambda2 = 0.3;
  /// Weights inside the auxiliary term.
  double w_augtype = 1.0;
  double w_recon = 1.0;
  /// Centre update rate.
  double center_alpha = 0.5;
  /// Reconstruction as a sum over cells instead of a mean.
  bool recon_sum = false;

  /// Throws ConfigError naming the offending field.
  void Validate() const;
  LatentShape Latent() const;

  /// Rows 1..5 of the ablation matrix applied to `base`:
  /// 1 everything; 2 no augmentation-type head; 3 no auxiliary heads;
  /// 4 attention only (the single-task baseline); 5 plain CNN-BLSTM.
  static ModelConfig Ablation(int row, ModelConfig base);

  bool operator==(const ModelConfig &) const = default;
};

struct EmotionOutput {
  ad::Tensor<float> logits;     // [B,n_classes]
  ad::Tensor<float> features;   // [B,ce_dense]
  ad::Tensor<float> attention;  // [B,T]
};

class Model {
 public:
  /// Each subnetwork initialises from its own stream derived from `seed`,
  /// so toggling one component leaves the others bit-identical.
  Model(const ModelConfig &config, std::uint64_t seed);
  Model(const Model &) = delete;
  Model &operator=(const Model &) = delete;
  Model(Model &&) = default;
  Model &operator=(Model &&) = default;

  /// Independent copy with the same values.
  std::unique_ptr<Model> Clone() const;

  const ModelConfig &config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ad::ParameterStore<float> &params() { return params_; }
  const ad::ParameterStore<float> &params() const { return params_; }

  bool has_decoder() const { return config_.use_aux_reconstruction; }
  bool has_augtype() const { return config_.use_aux_augtype; }
  bool has_centers() const { return config_.use_center_loss; }
  bool has_attention() const { return config_.use_attention; }
  /// Trainable weights plus centre vectors.
  std::size_t ParameterCount() const;

  /// Class centres, row-major [n_classes, ce_dense]; empty without centre loss.
  std::vector<float> &centers() { return centers_; }
  const std::vector<float> &centers() const { return centers_; }

  /// Per-mel-bin input statistics (identity until fitted).
  const std::vector<float> &norm_mean() const { return norm_mean_; }
  const std::vector<float> &norm_inv_std() const { return norm_inv_std_; }
  void SetNormalization(std::vector<float> mean, std::vector<float> inv_std);
  void FitNormalization(const std::vector<const LogMelSpectrogram *> &specs);

  /// Batches spectrograms into [B,1,M,T]. Throws ShapeError on a mismatch.
  ad::Tensor<float> Input(const std::vector<const LogMelSpectrogram *> &specs) const;
  ad::Tensor<float> Normalize(const ad::Tensor<float> &x) const;
  /// Conv stack on a normalised batch: [B,C,H,W].
  ad::Tensor<float> Encode(const ad::Tensor<float> &x) const;
  static ad::Tensor<float> Sequence(const ad::Tensor<float> &z) { return ad::ToSequence(z); }
  ad::Tensor<float> Decode(const ad::Tensor<float> &z) const;
  EmotionOutput ClassifyEmotion(const ad::Tensor<float> &z_seq) const;
  ad::Tensor<float> ClassifyAugType(const ad::Tensor<float> &z_seq, bool train, Rng *rng) const;

  /// Emotion logits for raw (un-normalised) spectrograms, eval mode.
  ad::Tensor<float> EmotionLogits(const ad::Tensor<float> &raw_input) const;
  /// Arg-max emotion per spectrogram, batched.
  std::vector<int> Predict(const std::vector<const LogMelSpectrogram *> &specs,
                           std::size_t batch_size = 32) const;

  std::uint64_t Checksum(const std::set<std::string> &groups = {}) const {
    return params_.Checksum(groups);
  }

 private:
  ModelConfig config_;
  std::uint64_t seed_;
  ad::ParameterStore<float> params_;
  ad::ConvStack<float> encoder_;
  ad::DeconvStack<float> decoder_;
  ad::BiLstm<float> ce_lstm_;
  ad::AttentionPool<float> attention_;
  ad::Dense<float> ce_dense_, ce_out_;
  ad::BiLstm<float> ca_lstm_;
  ad::Dense<float> ca_dense1_, ca_dense2_, ca_out_;
  std::vector<float> centers_;
  std::vector<float> norm_mean_, norm_inv_std_;
};

}  // namespace mtlaug

#endif  // MTLAUG_MODEL_H_
