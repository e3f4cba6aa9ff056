// core/src/config.cc

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

#include "mtlaug/config.h"

#include <cmath>
#include <fstream>
#include <set>

#include "mtlaug/error.h"
#include "mtlaug/features.h"

namespace mtlaug {

using nlohmann::json;

namespace {

/// Strict object reader: every key must be consumed by Finish().
class Reader {
 public:
  Reader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  template <typename T>
  void Opt(const char *key, T &out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception &) {
      throw ConfigError(Field(key), "has the wrong type (" + std::string(j_.at(key).type_name()) + ")");
    }
  }

  bool Has(const char *key) const { return j_.contains(key); }
  const json &At(const char *key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string Field(const char *key) const { return path_ + "." + key; }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + "." + it.key(), "unknown field");
  }

 private:
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

FeatureConfig FeaturesFromJson(const json &j, const std::string &path) {
  FeatureConfig c;
  Reader r(j, path);
  r.Opt("win_ms", c.win_ms);
  r.Opt("hop_ms", c.hop_ms);
  r.Opt("n_mels", c.n_mels);
  r.Opt("n_fft", c.n_fft);
  r.Opt("fmin", c.fmin);
  r.Opt("fmax", c.fmax);
  r.Opt("target_dur_s", c.target_dur_s);
  r.Opt("log_floor", c.log_floor);
  r.Opt("sample_rate", c.sample_rate);
  r.Finish();
  return c;
}

SpecAugmentParams SpecFromJson(const json &j, const std::string &path) {
  SpecAugmentParams p;
  Reader r(j, path);
  r.Opt("F", p.F);
  r.Opt("T_max", p.T_max);
  r.Opt("n_freq_masks", p.n_freq_masks);
  r.Opt("n_time_masks", p.n_time_masks);
  r.Opt("mask_with_mean", p.mask_with_mean);
  r.Finish();
  return p;
}

MixupParams MixFromJson(const json &j, const std::string &path) {
  MixupParams p;
  Reader r(j, path);
  if (r.Has("fixed_lambda") && !r.At("fixed_lambda").is_null()) {
    double v = 0;
    r.Opt("fixed_lambda", v);
    p.fixed_lambda = v;
  }
  r.Opt("alpha", p.alpha);
  r.Finish();
  return p;
}

AugmentPolicy PolicyFromJson(const json &j, const std::string &path) {
  AugmentPolicy p;
  Reader r(j, path);
  r.Opt("none", p.none);
  r.Opt("speed", p.speed);
  r.Opt("specaugment", p.specaugment);
  r.Opt("mixup", p.mixup);
  r.Opt("speed_factors", p.speed_factors);
  r.Opt("binary_aux", p.binary_aux);
  if (r.Has("spec")) p.spec = SpecFromJson(r.At("spec"), r.Field("spec"));
  if (r.Has("mix")) p.mix = MixFromJson(r.At("mix"), r.Field("mix"));
  r.Finish();
  return p;
}

TrainConfig TrainFromJson(const json &j, const std::string &path) {
  TrainConfig c;
  Reader r(j, path);
  r.Opt("lr", c.lr);
  r.Opt("min_lr", c.min_lr);
  r.Opt("lr_factor", c.lr_factor);
  r.Opt("patience", c.patience);
  r.Opt("max_epochs", c.max_epochs);
  r.Opt("batch_size", c.batch_size);
  r.Opt("unlabeled_per_labeled", c.unlabeled_per_labeled);
  r.Opt("val_metric_uar", c.val_metric_uar);
  r.Opt("val_loss_tiebreak", c.val_loss_tiebreak);
  r.Opt("regenerate_augmentations", c.regenerate_augmentations);
  r.Finish();
  return c;
}

SynthConfig SynthFromJson(const json &j, const std::string &path) {
  SynthConfig c;
  Reader r(j, path);
  r.Opt("n_speakers", c.n_speakers);
  r.Opt("utterances_per_speaker_per_class", c.utterances_per_speaker_per_class);
  r.Opt("duration_s", c.duration_s);
  r.Opt("seed", c.seed);
  r.Opt("sample_rate", c.sample_rate);
  r.Opt("speaker_f0_spread_hz", c.speaker_f0_spread_hz);
  r.Opt("utterance_f0_jitter_hz", c.utterance_f0_jitter_hz);
  r.Opt("utterance_jitter", c.utterance_jitter);
  r.Opt("f0_scale", c.f0_scale);
  r.Opt("rate_scale", c.rate_scale);
  r.Opt("energy_scale", c.energy_scale);
  r.Opt("speaker_prefix", c.speaker_prefix);
  r.Opt("corpus_tag", c.corpus_tag);
  if (r.Has("class_prototypes")) {
    const json &arr = r.At("class_prototypes");
    const std::string f = r.Field("class_prototypes");
    if (!arr.is_array() || arr.size() != kNumEmotions)
      throw ConfigError(f, "must be an array of four prototypes");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader p(arr[i], f + "[" + std::to_string(i) + "]");
      auto &proto = c.class_prototypes[i];
      p.Opt("base_f0_hz", proto.base_f0_hz);
      p.Opt("f0_slope_hz_per_s", proto.f0_slope_hz_per_s);
      p.Opt("energy", proto.energy);
      p.Opt("syllable_rate_hz", proto.syllable_rate_hz);
      p.Finish();
    }
  }
  r.Finish();
  return c;
}

CorpusSource CorpusFromJson(const json &j, const std::string &path, CorpusSource c) {
  Reader r(j, path);
  r.Opt("manifest", c.manifest);
  r.Opt("merge_excited_into_happy", c.merge_excited_into_happy);
  if (r.Has("synth")) c.synth = SynthFromJson(r.At("synth"), r.Field("synth"));
  r.Finish();
  return c;
}

ProtocolConfig ProtocolFromJson(const json &j, const std::string &path) {
  ProtocolConfig c;
  Reader r(j, path);
  r.Opt("n_repeats", c.n_repeats);
  r.Opt("val_fraction", c.val_fraction);
  r.Opt("speaker_disjoint_split", c.speaker_disjoint_split);
  r.Opt("snrs", c.snrs);
  r.Opt("epsilon", c.epsilon);
  r.Opt("bim_steps", c.bim_steps);
  r.Opt("bim_step_size", c.bim_step_size);
  r.Opt("fractions", c.fractions);
  r.Opt("fraction_remainder_unlabeled", c.fraction_remainder_unlabeled);
  r.Opt("max_folds", c.max_folds);
  r.Finish();
  return c;
}

// Library validators throw ValidationError; surface them with a field path.
template <typename F>
void Check(const std::string &field, F &&fn) {
  try {
    fn();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

json ToJson(const CorpusSource &c) {
  return {{"manifest", c.manifest},
          {"merge_excited_into_happy", c.merge_excited_into_happy},
          {"synth", ToJson(c.synth)}};
}

json ToJson(const ProtocolConfig &c) {
  return {{"n_repeats", c.n_repeats},
          {"val_fraction", c.val_fraction},
          {"speaker_disjoint_split", c.speaker_disjoint_split},
          {"snrs", c.snrs},
          {"epsilon", c.epsilon},
          {"bim_steps", c.bim_steps},
          {"bim_step_size", c.bim_step_size},
          {"fractions", c.fractions},
          {"fraction_remainder_unlabeled", c.fraction_remainder_unlabeled},
          {"max_folds", c.max_folds}};
}

json ToJson(const FeatureConfig &c) {
  return {{"win_ms", c.win_ms},       {"hop_ms", c.hop_ms},
          {"n_mels", c.n_mels},       {"n_fft", c.n_fft},
          {"fmin", c.fmin},           {"fmax", c.fmax},
          {"target_dur_s", c.target_dur_s}, {"log_floor", c.log_floor},
          {"sample_rate", c.sample_rate}};
}

json ToJson(const ModelConfig &c) {
  json enc = json::array();
  for (const auto &s : c.encoder)
    enc.push_back({{"kernel", s.kernel}, {"channels", s.channels}, {"stride", s.stride}});
  return {{"input_mels", c.input_mels},
          {"input_frames", c.input_frames},
          {"encoder", enc},
          {"ce_units", c.ce_units},
          {"ce_dense", c.ce_dense},
          {"n_classes", c.n_classes},
          {"ca_units", c.ca_units},
          {"ca_dense", c.ca_dense},
          {"ca_dropout", c.ca_dropout},
          {"n_aug_classes", c.n_aug_classes},
          {"use_attention", c.use_attention},
          {"use_center_loss", c.use_center_loss},
          {"use_aux_augtype", c.use_aux_augtype},
          {"use_aux_reconstruction", c.use_aux_reconstruction},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"w_augtype", c.w_augtype},
          {"w_recon", c.w_recon},
          {"center_alpha", c.center_alpha},
          {"recon_sum", c.recon_sum}};
}

ModelConfig ModelConfigFromJson(const json &j, const std::string &path) {
  ModelConfig c;
  Reader r(j, path);
  r.Opt("input_mels", c.input_mels);
  r.Opt("input_frames", c.input_frames);
  if (r.Has("encoder")) {
    const json &arr = r.At("encoder");
    const std::string f = r.Field("encoder");
    if (!arr.is_array()) throw ConfigError(f, "must be an array");
    c.encoder.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader l(arr[i], f + "[" + std::to_string(i) + "]");
      ad::ConvSpec s;
      l.Opt("kernel", s.kernel);
      l.Opt("channels", s.channels);
      l.Opt("stride", s.stride);
      l.Finish();
      c.encoder.push_back(s);
    }
  }
  r.Opt("ce_units", c.ce_units);
  r.Opt("ce_dense", c.ce_dense);
  r.Opt("n_classes", c.n_classes);
  r.Opt("ca_units", c.ca_units);
  r.Opt("ca_dense", c.ca_dense);
  r.Opt("ca_dropout", c.ca_dropout);
  r.Opt("n_aug_classes", c.n_aug_classes);
  r.Opt("use_attention", c.use_attention);
  r.Opt("use_center_loss", c.use_center_loss);
  r.Opt("use_aux_augtype", c.use_aux_augtype);
  r.Opt("use_aux_reconstruction", c.use_aux_reconstruction);
  r.Opt("lambda1", c.lambda1);
  r.Opt("lambda2", c.lambda2);
  r.Opt("w_augtype", c.w_augtype);
  r.Opt("w_recon", c.w_recon);
  r.Opt("center_alpha", c.center_alpha);
  r.Opt("recon_sum", c.recon_sum);
  r.Finish();
  return c;
}

json ToJson(const TrainConfig &c) {
  return {{"lr", c.lr},
          {"min_lr", c.min_lr},
          {"lr_factor", c.lr_factor},
          {"patience", c.patience},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"unlabeled_per_labeled", c.unlabeled_per_labeled},
          {"val_metric_uar", c.val_metric_uar},
          {"val_loss_tiebreak", c.val_loss_tiebreak},
          {"regenerate_augmentations", c.regenerate_augmentations}};
}

json ToJson(const AugmentPolicy &c) {
  return {{"none", c.none},
          {"speed", c.speed},
          {"specaugment", c.specaugment},
          {"mixup", c.mixup},
          {"speed_factors", c.speed_factors},
          {"binary_aux", c.binary_aux},
          {"spec",
           {{"F", c.spec.F},
            {"T_max", c.spec.T_max},
            {"n_freq_masks", c.spec.n_freq_masks},
            {"n_time_masks", c.spec.n_time_masks},
            {"mask_with_mean", c.spec.mask_with_mean}}},
          {"mix",
           {{"fixed_lambda", c.mix.fixed_lambda ? json(*c.mix.fixed_lambda) : json(nullptr)},
            {"alpha", c.mix.alpha}}}};
}

json ToJson(const SynthConfig &c) {
  json protos = json::array();
  for (const auto &p : c.class_prototypes)
    protos.push_back({{"base_f0_hz", p.base_f0_hz},
                      {"f0_slope_hz_per_s", p.f0_slope_hz_per_s},
                      {"energy", p.energy},
                      {"syllable_rate_hz", p.syllable_rate_hz}});
  return {{"n_speakers", c.n_speakers},
          {"utterances_per_speaker_per_class", c.utterances_per_speaker_per_class},
          {"duration_s", c.duration_s},
          {"seed", c.seed},
          {"sample_rate", c.sample_rate},
          {"class_prototypes", protos},
          {"speaker_f0_spread_hz", c.speaker_f0_spread_hz},
          {"utterance_f0_jitter_hz", c.utterance_f0_jitter_hz},
          {"utterance_jitter", c.utterance_jitter},
          {"f0_scale", c.f0_scale},
          {"rate_scale", c.rate_scale},
          {"energy_scale", c.energy_scale},
          {"speaker_prefix", c.speaker_prefix},
          {"corpus_tag", c.corpus_tag}};
}

CorpusSource ExperimentConfig::DefaultTarget() {
  CorpusSource t;
  t.synth.seed = 11;
  t.synth.f0_scale = 0.92;
  t.synth.rate_scale = 1.1;
  t.synth.energy_scale = 0.9;
  t.synth.speaker_prefix = "tgt";
  t.synth.corpus_tag = "synth_target";
  return t;
}

ModelConfig ExperimentConfig::ResolvedModel() const {
  ModelConfig m = model;
  m.input_mels = features.n_mels;
  m.input_frames = features.NumFrames();
  m.n_aug_classes = policy.NumAuxClasses();
  return m;
}

void ExperimentConfig::Validate() const {
  Check("features", [&] { features.Validate(); });
  Check("policy", [&] { policy.Validate(); });
  if (policy.spec.F > features.n_mels) throw ConfigError("policy.spec.F", "exceeds features.n_mels");
  if (policy.spec.T_max > features.NumFrames())
    throw ConfigError("policy.spec.T_max", "exceeds the frame count");
  ResolvedModel().Validate();
  Check("train", [&] { train.Validate(); });
  auto synth_ok = [](const CorpusSource &c, const std::string &f) {
    if (c.is_synthetic()) Check(f + ".synth", [&] { c.synth.Validate(); });
  };
  synth_ok(corpus, "corpus");
  synth_ok(target, "target");
  if (unlabeled) synth_ok(*unlabeled, "unlabeled");
  const auto &p = protocol;
  if (p.n_repeats < 1) throw ConfigError("protocol.n_repeats", "must be >= 1");
  if (!(p.val_fraction > 0.0 && p.val_fraction < 1.0))
    throw ConfigError("protocol.val_fraction", "must lie in (0, 1)");
  if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon))
    throw ConfigError("protocol.epsilon", "must be finite and >= 0");
  if (p.bim_steps < 1) throw ConfigError("protocol.bim_steps", "must be >= 1");
  if (p.bim_step_size < 0.0) throw ConfigError("protocol.bim_step_size", "must be >= 0");
  if (p.snrs.empty()) throw ConfigError("protocol.snrs", "must not be empty");
  for (double f : p.fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("protocol.fractions", "entries must lie in (0, 1]");
  if (p.max_folds < 0) throw ConfigError("protocol.max_folds", "must be >= 0");
}

json ExperimentConfig::ToJson() const {
  json j = {{"name", name},
            {"corpus", mtlaug::ToJson(corpus)},
            {"target", mtlaug::ToJson(target)},
            {"unlabeled", unlabeled ? mtlaug::ToJson(*unlabeled) : json(nullptr)},
            {"noise_dir", noise_dir},
            {"features", mtlaug::ToJson(features)},
            {"policy", mtlaug::ToJson(policy)},
            {"model", mtlaug::ToJson(model)},
            {"train", mtlaug::ToJson(train)},
            {"protocol", mtlaug::ToJson(protocol)},
            {"seed", seed}};
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const json &j) {
  ExperimentConfig c;
  Reader r(j, "config");
  r.Opt("name", c.name);
  if (r.Has("corpus")) c.corpus = CorpusFromJson(r.At("corpus"), "corpus", c.corpus);
  if (r.Has("target")) c.target = CorpusFromJson(r.At("target"), "target", c.target);
  if (r.Has("unlabeled")) {
    const json &u = r.At("unlabeled");
    if (!u.is_null()) c.unlabeled = CorpusFromJson(u, "unlabeled", CorpusSource{});
  }
  r.Opt("noise_dir", c.noise_dir);
  if (r.Has("features")) c.features = FeaturesFromJson(r.At("features"), "features");
  if (r.Has("policy")) c.policy = PolicyFromJson(r.At("policy"), "policy");
  if (r.Has("model")) c.model = ModelConfigFromJson(r.At("model"), "model");
  if (r.Has("train")) c.train = TrainFromJson(r.At("train"), "train");
  if (r.Has("protocol")) c.protocol = ProtocolFromJson(r.At("protocol"), "protocol");
  r.Opt("seed", c.seed);
  r.Finish();
  c.model = c.ResolvedModel();
  c.Validate();
  return c;
}

std::string ExperimentConfig::Hash() const { return HashHex(ToJson().dump()); }

ExperimentConfig LoadExperimentConfig(const std::filesystem::path &path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error &e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return ExperimentConfig::FromJson(j);
}

void ApplyOverride(json &doc, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error &) {
    value = raw;
  }
  json *node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set", "empty path component in '" + key + "'");
    json *next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception &) {
        throw ConfigError(key, "array index expected at '" + part + "'");
      }
      if (idx >= node->size()) throw ConfigError(key, "index out of range");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError(key, "cannot descend into a scalar");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

}  // namespace mtlaug
