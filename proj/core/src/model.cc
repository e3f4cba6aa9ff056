// core/src/model.cc

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

#include "mtlaug/model.h"

#include <algorithm>
#include <cmath>

#include "mtlaug/error.h"

namespace mtlaug {

using ad::Tensor;

void ModelConfig::Validate() const {
  if (input_mels < 1) throw ConfigError("model.input_mels", "must be >= 1");
  if (input_frames < 1) throw ConfigError("model.input_frames", "must be >= 1");
  if (encoder.empty()) throw ConfigError("model.encoder", "needs at least one layer");
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    const auto &s = encoder[i];
    const std::string f = "model.encoder[" + std::to_string(i) + "]";
    if (s.kernel < 1 || s.kernel % 2 == 0) throw ConfigError(f + ".kernel", "must be odd and >= 1");
    if (s.channels < 1) throw ConfigError(f + ".channels", "must be >= 1");
    if (s.stride < 1) throw ConfigError(f + ".stride", "must be >= 1");
  }
  auto positive = [](int v, const char *field) {
    if (v < 1) throw ConfigError(field, "must be >= 1");
  };
  positive(ce_units, "model.ce_units");
  positive(ce_dense, "model.ce_dense");
  positive(n_classes, "model.n_classes");
  positive(ca_units, "model.ca_units");
  positive(ca_dense, "model.ca_dense");
  if (n_aug_classes < 2) throw ConfigError("model.n_aug_classes", "must be >= 2");
  if (!(ca_dropout >= 0.0 && ca_dropout < 1.0))
    throw ConfigError("model.ca_dropout", "must lie in [0, 1)");
  auto nonneg = [](double v, const char *field) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError(field, "must be finite and >= 0");
  };
  nonneg(lambda1, "model.lambda1");
  nonneg(lambda2, "model.lambda2");
  nonneg(w_augtype, "model.w_augtype");
  nonneg(w_recon, "model.w_recon");
  nonneg(center_alpha, "model.center_alpha");
  if (lambda1 > 0.0 && !use_aux_augtype && !use_aux_reconstruction)
    throw ConfigError("model.lambda1", "is positive but both auxiliary tasks are disabled");
  const auto lat = Latent();
  if (lat.width < 1 || lat.height < 1) throw ConfigError("model.encoder", "collapses the input");
}

LatentShape ModelConfig::Latent() const {
  std::size_t h = static_cast<std::size_t>(input_mels), w = static_cast<std::size_t>(input_frames);
  for (const auto &s : encoder) {
    h = ad::ConvOutExtent(h, s);
    w = ad::ConvOutExtent(w, s);
  }
  return {static_cast<std::size_t>(encoder.empty() ? 1 : encoder.back().channels), h, w};
}

ModelConfig ModelConfig::Ablation(int row, ModelConfig c) {
  if (row < 1 || row > 5) throw ConfigError("ablation", "row must be 1..5");
  c.use_attention = row <= 4;
  c.use_center_loss = row <= 3;
  c.use_aux_reconstruction = row <= 2;
  c.use_aux_augtype = row == 1;
  if (!c.use_aux_augtype && !c.use_aux_reconstruction) c.lambda1 = 0.0;
  if (!c.use_center_loss) c.lambda2 = 0.0;
  return c;
}

Model::Model(const ModelConfig &config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.Validate();
  const Rng root(seed);
  const auto lat = config_.Latent();
  {
    Rng r = root.Derive(1);
    encoder_ = ad::ConvStack<float>(params_, "encoder", kGroupEncoder, 1, config_.encoder, r);
  }
  if (has_decoder()) {
    Rng r = root.Derive(2);
    decoder_ = ad::DeconvStack<float>(params_, "decoder", kGroupDecoder, 1, config_.encoder,
                                      static_cast<std::size_t>(config_.input_mels),
                                      static_cast<std::size_t>(config_.input_frames), r);
  }
  {
    Rng r = root.Derive(3);
    const auto units = static_cast<std::size_t>(config_.ce_units);
    const auto dense = static_cast<std::size_t>(config_.ce_dense);
    ce_lstm_ = ad::BiLstm<float>(params_, "emotion.blstm", kGroupEmotion, lat.seq_dim(), units, r);
    ce_dense_ = ad::Dense<float>(params_, "emotion.dense", kGroupEmotion, 2 * units, dense, r);
    ce_out_ = ad::Dense<float>(params_, "emotion.out", kGroupEmotion, dense,
                               static_cast<std::size_t>(config_.n_classes), r);
  }
  if (has_attention()) {
    Rng r = root.Derive(5);
    attention_ = ad::AttentionPool<float>(params_, "emotion.attention", kGroupEmotion,
                                          2 * static_cast<std::size_t>(config_.ce_units), r);
  }
  if (has_augtype()) {
    Rng r = root.Derive(4);
    const auto units = static_cast<std::size_t>(config_.ca_units);
    const auto dense = static_cast<std::size_t>(config_.ca_dense);
    ca_lstm_ = ad::BiLstm<float>(params_, "augtype.blstm", kGroupAugType, lat.seq_dim(), units, r);
    ca_dense1_ = ad::Dense<float>(params_, "augtype.dense1", kGroupAugType, 2 * units, dense, r);
    ca_dense2_ = ad::Dense<float>(params_, "augtype.dense2", kGroupAugType, dense, dense, r);
    ca_out_ = ad::Dense<float>(params_, "augtype.out", kGroupAugType, dense,
                               static_cast<std::size_t>(config_.n_aug_classes), r);
  }
  if (has_centers())
    centers_.assign(static_cast<std::size_t>(config_.n_classes * config_.ce_dense), 0.0f);
  norm_mean_.assign(static_cast<std::size_t>(config_.input_mels), 0.0f);
  norm_inv_std_.assign(static_cast<std::size_t>(config_.input_mels), 1.0f);
}

std::unique_ptr<Model> Model::Clone() const {
  auto m = std::make_unique<Model>(config_, seed_);
  m->params_.Restore(params_.Snapshot());
  m->centers_ = centers_;
  m->norm_mean_ = norm_mean_;
  m->norm_inv_std_ = norm_inv_std_;
  return m;
}

std::size_t Model::ParameterCount() const { return params_.NumElements() + centers_.size(); }

void Model::SetNormalization(std::vector<float> mean, std::vector<float> inv_std) {
  const auto m = static_cast<std::size_t>(config_.input_mels);
  if (mean.size() != m || inv_std.size() != m)
    throw ShapeError("normalisation statistics must have one entry per mel bin");
  norm_mean_ = std::move(mean);
  norm_inv_std_ = std::move(inv_std);
}

void Model::FitNormalization(const std::vector<const LogMelSpectrogram *> &specs) {
  const auto M = static_cast<std::size_t>(config_.input_mels);
  std::vector<double> sum(M, 0.0), sq(M, 0.0);
  std::size_t frames = 0;
  for (const auto *s : specs) {
    if (s->n_mels != config_.input_mels) throw ShapeError("normalisation: mel count mismatch");
    for (std::size_t m = 0; m < M; ++m)
      for (int t = 0; t < s->n_frames; ++t) {
        const double v = s->at(static_cast<int>(m), t);
        sum[m] += v;
        sq[m] += v * v;
      }
    frames += static_cast<std::size_t>(s->n_frames);
  }
  if (frames == 0) throw ValidationError("normalisation: no data");
  std::vector<float> mean(M), inv(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double mu = sum[m] / static_cast<double>(frames);
    const double var = std::max(0.0, sq[m] / static_cast<double>(frames) - mu * mu);
    mean[m] = static_cast<float>(mu);
    inv[m] = static_cast<float>(1.0 / std::max(std::sqrt(var), 1e-3));
  }
  SetNormalization(std::move(mean), std::move(inv));
}

Tensor<float> Model::Input(const std::vector<const LogMelSpectrogram *> &specs) const {
  const auto M = static_cast<std::size_t>(config_.input_mels);
  const auto T = static_cast<std::size_t>(config_.input_frames);
  if (specs.empty()) throw ShapeError("model input: empty batch");
  std::vector<float> v;
  v.reserve(specs.size() * M * T);
  for (const auto *s : specs) {
    if (static_cast<std::size_t>(s->n_mels) != M || static_cast<std::size_t>(s->n_frames) != T)
      throw ShapeError("model input: expected " + std::to_string(M) + "x" + std::to_string(T) +
                       ", got " + std::to_string(s->n_mels) + "x" + std::to_string(s->n_frames));
    v.insert(v.end(), s->data.begin(), s->data.end());
  }
  return Tensor<float>::Constant({specs.size(), 1, M, T}, std::move(v));
}

Tensor<float> Model::Normalize(const Tensor<float> &x) const {
  return ad::NormalizeRows<float>(x, norm_mean_, norm_inv_std_);
}

Tensor<float> Model::Encode(const Tensor<float> &x) const {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != static_cast<std::size_t>(config_.input_mels) ||
      x.dim(3) != static_cast<std::size_t>(config_.input_frames))
    throw ShapeError("encoder: input " + ad::ShapeString(x.shape()) + " does not match config");
  return encoder_(x);
}

Tensor<float> Model::Decode(const Tensor<float> &z) const {
  if (!has_decoder()) throw UsageError("decoder disabled in this configuration");
  const auto lat = config_.Latent();
  if (z.rank() != 4 || z.dim(1) != lat.channels || z.dim(2) != lat.height || z.dim(3) != lat.width)
    throw ShapeError("decoder: latent " + ad::ShapeString(z.shape()) + " does not match config");
  return decoder_(z);
}

EmotionOutput Model::ClassifyEmotion(const Tensor<float> &z_seq) const {
  const auto lat = config_.Latent();
  if (z_seq.rank() != 3 || z_seq.dim(2) != lat.seq_dim())
    throw ShapeError("emotion classifier: sequence " + ad::ShapeString(z_seq.shape()) +
                     " does not match config");
  auto h = ce_lstm_(z_seq).concat;
  auto pool = has_attention() ? attention_(h) : ad::MeanPool(h);
  EmotionOutput out;
  out.attention = pool.weights;
  out.features = ad::Relu(ce_dense_(pool.pooled));
  out.logits = ce_out_(out.features);
  return out;
}

Tensor<float> Model::ClassifyAugType(const Tensor<float> &z_seq, bool train, Rng *rng) const {
  if (!has_augtype()) throw UsageError("augmentation-type classifier disabled");
  const auto lat = config_.Latent();
  if (z_seq.rank() != 3 || z_seq.dim(2) != lat.seq_dim())
    throw ShapeError("augtype classifier: sequence " + ad::ShapeString(z_seq.shape()) +
                     " does not match config");
  if (train && rng == nullptr) throw UsageError("augtype classifier: training needs an rng");
  auto h = ad::BiLstm<float>::FinalStates(ca_lstm_(z_seq));
  auto a = ad::Relu(ca_dense1_(h));
  Rng dummy(0);
  a = ad::Dropout(a, config_.ca_dropout, train, rng ? *rng : dummy);
  a = ad::Relu(ca_dense2_(a));
  return ca_out_(a);
}

Tensor<float> Model::EmotionLogits(const Tensor<float> &raw_input) const {
  return ClassifyEmotion(Sequence(Encode(Normalize(raw_input)))).logits;
}

std::vector<int> Model::Predict(const std::vector<const LogMelSpectrogram *> &specs,
                                std::size_t batch_size) const {
  std::vector<int> out;
  out.reserve(specs.size());
  const auto k = static_cast<std::size_t>(config_.n_classes);
  for (std::size_t i = 0; i < specs.size(); i += batch_size) {
    std::vector<const LogMelSpectrogram *> batch(
        specs.begin() + static_cast<long>(i),
        specs.begin() + static_cast<long>(std::min(specs.size(), i + batch_size)));
    auto logits = EmotionLogits(Input(batch));
    for (std::size_t r = 0; r < batch.size(); ++r) {
      auto row = logits.data().subspan(r * k, k);
      out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
  }
  return out;
}

}  // namespace mtlaug
