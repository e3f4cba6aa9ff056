// core/src/train.cc

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

#include "mtlaug/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "mtlaug/ad/checkpoint.h"
#include "mtlaug/config.h"
#include "mtlaug/error.h"
#include "mtlaug/log.h"
#include "mtlaug/metrics.h"

namespace mtlaug {

using ad::Tensor;
using nlohmann::json;

void TrainConfig::Validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr", "must be positive");
  if (!(min_lr > 0.0)) throw ConfigError("train.min_lr", "must be positive");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ConfigError("train.lr_factor", "must lie in (0, 1)");
  if (patience < 1) throw ConfigError("train.patience", "must be >= 1");
  if (max_epochs < 1) throw ConfigError("train.max_epochs", "must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (unlabeled_per_labeled < 0) throw ConfigError("train.unlabeled_per_labeled", "must be >= 0");
}

namespace {

std::vector<float> OneHotRows(const std::vector<int> &labels, int k) {
  std::vector<float> t(labels.size() * static_cast<std::size_t>(k), 0.0f);
  for (std::size_t i = 0; i < labels.size(); ++i)
    t[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(labels[i])] = 1.0f;
  return t;
}

std::vector<int> ArgMaxRows(const Tensor<float> &logits) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = logits.data().subspan(r * k, k);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace

MtlLossGraph BuildMtlLoss(const Model &model, std::span<const AugmentedSample *const> batch,
                          BatchMode mode, const AugmentPolicy &policy, bool train, Rng *rng) {
  if (batch.empty()) throw UsageError("mtl loss: empty batch");
  const bool labeled = mode == BatchMode::kLabeled;
  for (const auto *s : batch)
    if (s->labeled() != labeled)
      throw UsageError(labeled ? "mtl loss: unlabeled sample in a labeled batch"
                               : "mtl loss: labeled sample in an unlabeled batch");
  const ModelConfig &cfg = model.config();
  MtlLossGraph g;
  g.breakdown.lambda1 = cfg.lambda1;
  g.breakdown.lambda2 = cfg.lambda2;

  std::vector<const LogMelSpectrogram *> specs;
  specs.reserve(batch.size());
  for (const auto *s : batch) specs.push_back(&s->features);
  auto xn = model.Normalize(model.Input(specs));
  auto z = model.Encode(xn);
  auto seq = Model::Sequence(z);
  g.groups.insert(kGroupEncoder);

  Tensor<float> pri;
  if (labeled) {
    auto emo = model.ClassifyEmotion(seq);
    std::vector<float> targets;
    targets.reserve(batch.size() * kNumEmotions);
    for (const auto *s : batch) targets.insert(targets.end(), s->emotion->begin(), s->emotion->end());
    auto l_s = ad::SoftmaxCrossEntropy<float>(emo.logits, targets);
    g.breakdown.l_s = l_s.item();
    pri = l_s;
    g.groups.insert(kGroupEmotion);
    if (model.has_centers()) {
      // Mixed samples have no single class; they skip the centre term.
      std::vector<std::size_t> rows;
      std::vector<int> labels;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const int y = batch[i]->HardLabel();
        if (batch[i]->aug_type == AugmentationType::kMixup || y < 0) continue;
        rows.push_back(i);
        labels.push_back(y);
      }
      if (!rows.empty()) {
        auto feats = ad::SelectRows<float>(emo.features, rows);
        auto cl = ad::CenterLoss<float>(feats, labels, model.centers(),
                                        static_cast<std::size_t>(cfg.n_classes), cfg.center_alpha);
        g.breakdown.l_c = cl.loss.item();
        g.center_deltas = std::move(cl.center_deltas);
        if (cfg.lambda2 > 0.0) pri = ad::Add(pri, ad::Scale(cl.loss, static_cast<float>(cfg.lambda2)));
      }
    }
    g.breakdown.l_pri = pri.item();
  }

  Tensor<float> aux;
  if (cfg.lambda1 > 0.0) {
    if (model.has_augtype()) {
      auto logits = model.ClassifyAugType(seq, train, rng);
      std::vector<int> truth;
      for (const auto *s : batch) truth.push_back(policy.AuxLabel(s->aug_type));
      auto l = ad::SoftmaxCrossEntropy<float>(logits, OneHotRows(truth, cfg.n_aug_classes));
      g.breakdown.l_augtype = l.item();
      g.aux_predicted = ArgMaxRows(logits);
      g.aux_truth = std::move(truth);
      aux = ad::Scale(l, static_cast<float>(cfg.w_augtype));
      g.groups.insert(kGroupAugType);
    }
    if (model.has_decoder()) {
      auto recon = model.Decode(z);
      auto l = ad::SquaredError(recon, xn.Detach(),
                                cfg.recon_sum ? ad::Reduction::kSum : ad::Reduction::kMean);
      g.breakdown.l_recon = l.item();
      auto term = ad::Scale(l, static_cast<float>(cfg.w_recon));
      aux = aux.defined() ? ad::Add(aux, term) : term;
      g.groups.insert(kGroupDecoder);
    }
    if (aux.defined()) g.breakdown.l_aux = aux.item();
  }

  const float l1 = static_cast<float>(cfg.lambda1);
  if (labeled) {
    g.total = aux.defined() ? ad::Add(pri, ad::Scale(aux, l1)) : pri;
  } else if (aux.defined()) {
    g.total = ad::Scale(aux, l1);
  } else {
    g.groups.clear();
  }
  g.breakdown.l_mt = g.total.defined() ? g.total.item() : 0.0;
  return g;
}

MtlLossBreakdown MtlLoss(const Model &model, std::span<const AugmentedSample *const> batch,
                         BatchMode mode, const AugmentPolicy &policy) {
  return BuildMtlLoss(model, batch, mode, policy, false, nullptr).breakdown;
}

namespace {

MtlLossBreakdown Step(Model &model, ad::Adam &optimizer,
                      std::span<const AugmentedSample *const> batch, BatchMode mode,
                      const AugmentPolicy &policy, Rng &rng, std::vector<int> *aux_pred,
                      std::vector<int> *aux_truth) {
  model.params().ZeroGrad();
  auto g = BuildMtlLoss(model, batch, mode, policy, true, &rng);
  if (aux_pred) {
    aux_pred->insert(aux_pred->end(), g.aux_predicted.begin(), g.aux_predicted.end());
    aux_truth->insert(aux_truth->end(), g.aux_truth.begin(), g.aux_truth.end());
  }
  if (!g.total.defined()) return g.breakdown;
  g.total.Backward();
  optimizer.Step(model.params(), g.groups);
  if (mode == BatchMode::kLabeled && !g.center_deltas.empty()) {
    auto &c = model.centers();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += g.center_deltas[i];
  }
  model.params().ZeroGrad();
  return g.breakdown;
}

}  // namespace

MtlLossBreakdown TrainStep(Model &model, ad::Adam &optimizer,
                           std::span<const AugmentedSample *const> batch, BatchMode mode,
                           const AugmentPolicy &policy, Rng &rng) {
  return Step(model, optimizer, batch, mode, policy, rng, nullptr, nullptr);
}

const char *ScheduleEventName(ScheduleEvent e) {
  switch (e) {
    case ScheduleEvent::kImproved: return "improved";
    case ScheduleEvent::kNoChange: return "none";
    case ScheduleEvent::kHalved: return "halved";
    case ScheduleEvent::kHalted: return "halted";
  }
  return "?";
}

PlateauSchedule::PlateauSchedule(double lr, double min_lr, int patience, double factor)
    : min_lr_(min_lr), factor_(factor), patience_(patience) {
  state_.lr = lr;
}

ScheduleEvent PlateauSchedule::Observe(int epoch, double val, double val_loss) {
  if (state_.halt) return ScheduleEvent::kHalted;
  const bool has_loss = !std::isnan(val_loss);
  if (val > state_.best_val ||
      (has_loss && val == state_.best_val && val_loss < state_.best_loss * (1.0 - 1e-3))) {
    state_.best_val = val;
    state_.best_epoch = epoch;
    if (has_loss) state_.best_loss = val_loss;
    state_.epochs_since_improve = 0;
    return ScheduleEvent::kImproved;
  }
  if (++state_.epochs_since_improve < patience_) return ScheduleEvent::kNoChange;
  state_.epochs_since_improve = 0;
  state_.lr *= factor_;
  ++state_.halvings;
  if (state_.lr < min_lr_) {
    state_.halt = true;
    return ScheduleEvent::kHalted;
  }
  return ScheduleEvent::kHalved;
}

namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

json BreakdownJson(const MtlLossBreakdown &b) {
  return {{"l_mt", b.l_mt},       {"l_pri", b.l_pri},     {"l_s", b.l_s},
          {"l_c", b.l_c},         {"l_aux", b.l_aux},     {"l_augtype", b.l_augtype},
          {"l_recon", b.l_recon}, {"lambda1", b.lambda1}, {"lambda2", b.lambda2}};
}

MtlLossBreakdown BreakdownFromJson(const json &j) {
  MtlLossBreakdown b;
  b.l_mt = j.at("l_mt");
  b.l_pri = j.at("l_pri");
  b.l_s = j.at("l_s");
  b.l_c = j.at("l_c");
  b.l_aux = j.at("l_aux");
  b.l_augtype = j.at("l_augtype");
  b.l_recon = j.at("l_recon");
  b.lambda1 = j.at("lambda1");
  b.lambda2 = j.at("lambda2");
  return b;
}

void Accumulate(MtlLossBreakdown &acc, const MtlLossBreakdown &b) {
  acc.l_mt += b.l_mt;
  acc.l_pri += b.l_pri;
  acc.l_s += b.l_s;
  acc.l_c += b.l_c;
  acc.l_aux += b.l_aux;
  acc.l_augtype += b.l_augtype;
  acc.l_recon += b.l_recon;
  acc.lambda1 = b.lambda1;
  acc.lambda2 = b.lambda2;
}

void Divide(MtlLossBreakdown &acc, int n) {
  if (n <= 0) return;
  const double d = n;
  acc.l_mt /= d;
  acc.l_pri /= d;
  acc.l_s /= d;
  acc.l_c /= d;
  acc.l_aux /= d;
  acc.l_augtype /= d;
  acc.l_recon /= d;
}

}  // namespace

std::string History::LabeledCsv() const {
  std::ostringstream os;
  os << "epoch,lr,l_mt,l_pri,l_s,l_c,l_augtype,l_recon,val_uar\n";
  for (const auto &e : epochs) {
    const auto &b = e.labeled;
    os << e.epoch << ',' << Num(e.lr) << ',' << Num(b.l_mt) << ',' << Num(b.l_pri) << ','
       << Num(b.l_s) << ',' << Num(b.l_c) << ',' << Num(b.l_augtype) << ',' << Num(b.l_recon)
       << ',' << Num(e.val_uar) << '\n';
  }
  return os.str();
}

std::string History::UnlabeledCsv() const {
  std::ostringstream os;
  os << "epoch,lr,l_mt,l_aux,l_augtype,l_recon,steps\n";
  for (const auto &e : epochs) {
    const auto &b = e.unlabeled;
    os << e.epoch << ',' << Num(e.lr) << ',' << Num(b.l_mt) << ',' << Num(b.l_aux) << ','
       << Num(b.l_augtype) << ',' << Num(b.l_recon) << ',' << e.unlabeled_steps << '\n';
  }
  return os.str();
}

json History::ToJson() const {
  json j;
  j["best_epoch"] = best_epoch;
  j["best_val_uar"] = best_val_uar;
  j["epochs"] = json::array();
  for (const auto &e : epochs)
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"lr", e.lr},
                           {"labeled", BreakdownJson(e.labeled)},
                           {"unlabeled", BreakdownJson(e.unlabeled)},
                           {"labeled_steps", e.labeled_steps},
                           {"unlabeled_steps", e.unlabeled_steps},
                           {"aux_train_accuracy", e.aux_train_accuracy},
                           {"val_uar", e.val_uar},
                           {"val_loss", e.val_loss},
                           {"event", e.event}});
  j["steps"] = json::array();
  for (const auto &s : steps)
    j["steps"].push_back({{"epoch", s.epoch},
                          {"step", s.step},
                          {"mode", s.mode == BatchMode::kLabeled ? "labeled" : "unlabeled"},
                          {"loss", BreakdownJson(s.loss)}});
  return j;
}

History History::FromJson(const json &j) {
  History h;
  h.best_epoch = j.at("best_epoch");
  h.best_val_uar = j.at("best_val_uar");
  for (const auto &e : j.at("epochs")) {
    EpochRecord r;
    r.epoch = e.at("epoch");
    r.lr = e.at("lr");
    r.labeled = BreakdownFromJson(e.at("labeled"));
    r.unlabeled = BreakdownFromJson(e.at("unlabeled"));
    r.labeled_steps = e.at("labeled_steps");
    r.unlabeled_steps = e.at("unlabeled_steps");
    r.aux_train_accuracy = e.at("aux_train_accuracy");
    r.val_uar = e.at("val_uar");
    r.val_loss = e.at("val_loss");
    r.event = e.at("event");
    h.epochs.push_back(std::move(r));
  }
  for (const auto &s : j.at("steps")) {
    StepRecord r;
    r.epoch = s.at("epoch");
    r.step = s.at("step");
    r.mode = s.at("mode") == "labeled" ? BatchMode::kLabeled : BatchMode::kUnlabeled;
    r.loss = BreakdownFromJson(s.at("loss"));
    h.steps.push_back(r);
  }
  return h;
}

namespace {

struct Snapshot {
  std::vector<std::vector<float>> params;
  std::vector<float> centers;
};

void PutModel(ad::Archive &a, const Model &m, const std::string &prefix) {
  for (const auto &e : m.params().entries())
    a.Put(prefix + "param/" + e.name, e.tensor.shape(),
          std::vector<float>(e.tensor.data().begin(), e.tensor.data().end()));
  a.Put(prefix + "centers", {m.centers().size()}, m.centers());
  a.Put(prefix + "norm_mean", {m.norm_mean().size()}, m.norm_mean());
  a.Put(prefix + "norm_inv_std", {m.norm_inv_std().size()}, m.norm_inv_std());
}

void GetModel(const ad::Archive &a, Model &m, const std::string &prefix) {
  for (auto &e : m.params().entries()) {
    const auto &arr = a.Get(prefix + "param/" + e.name);
    if (arr.shape != e.tensor.shape())
      throw IntegrityError("checkpoint: shape mismatch for " + e.name);
    std::copy(arr.data.begin(), arr.data.end(), e.tensor.mutable_data().begin());
  }
  const auto &c = a.Get(prefix + "centers").data;
  if (c.size() != m.centers().size()) throw IntegrityError("checkpoint: centre size mismatch");
  m.centers() = c;
  m.SetNormalization(a.Get(prefix + "norm_mean").data, a.Get(prefix + "norm_inv_std").data);
}

json ScheduleJson(const ScheduleState &s) {
  return {{"lr", s.lr},
          {"best_val", s.best_val},
          {"best_epoch", s.best_epoch},
          {"best_loss", s.best_loss},
          {"epochs_since_improve", s.epochs_since_improve},
          {"halvings", s.halvings},
          {"halt", s.halt}};
}

ScheduleState ScheduleFromJson(const json &j) {
  ScheduleState s;
  s.lr = j.at("lr");
  s.best_val = j.at("best_val");
  s.best_epoch = j.at("best_epoch");
  s.best_loss = j.at("best_loss");
  s.epochs_since_improve = j.at("epochs_since_improve");
  s.halvings = j.at("halvings");
  s.halt = j.at("halt");
  return s;
}

void SaveTrainingCheckpoint(const std::filesystem::path &path, const Model &model,
                            const ad::AdamState &adam, const ScheduleState &sched,
                            const Snapshot &best, const History &history, int next_epoch,
                            std::uint64_t seed, const std::string &config_hash) {
  ad::Archive a;
  PutModel(a, model, "");
  json steps = json::object();
  for (const auto &[name, mom] : adam.moments) {
    a.Put("adam_m/" + name, {mom.m.size()}, mom.m);
    a.Put("adam_v/" + name, {mom.v.size()}, mom.v);
    steps[name] = mom.step;
  }
  for (std::size_t i = 0; i < best.params.size(); ++i)
    a.Put("best/param/" + model.params().entries()[i].name, model.params().entries()[i].tensor.shape(),
          best.params[i]);
  a.Put("best/centers", {best.centers.size()}, best.centers);
  auto &meta = a.meta();
  meta["kind"] = "training";
  meta["config_hash"] = config_hash;
  meta["seed"] = seed;
  // Every epoch draws from a stream derived from (seed, epoch), so the next
  // epoch index is the complete stream position.
  meta["next_epoch"] = next_epoch;
  meta["model_config"] = ToJson(model.config());
  meta["adam"] = {{"lr", adam.lr},     {"beta1", adam.beta1}, {"beta2", adam.beta2},
                  {"eps", adam.eps},   {"step", adam.step},   {"param_steps", steps}};
  meta["schedule"] = ScheduleJson(sched);
  meta["has_best"] = !best.params.empty();
  meta["history"] = history.ToJson();
  a.Save(path);
}

}  // namespace

void SaveModel(const Model &model, const std::filesystem::path &path, const std::string &config_hash) {
  ad::Archive a;
  PutModel(a, model, "");
  a.meta()["kind"] = "model";
  a.meta()["config_hash"] = config_hash;
  a.meta()["seed"] = model.seed();
  a.meta()["model_config"] = ToJson(model.config());
  a.Save(path);
}

std::unique_ptr<Model> LoadModel(const std::filesystem::path &path) {
  auto a = ad::Archive::Load(path);
  ModelConfig cfg;
  std::uint64_t seed = 0;
  try {
    cfg = ModelConfigFromJson(a.meta().at("model_config"));
    seed = a.meta().at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception &e) {
    throw IntegrityError(std::string("model file: bad metadata: ") + e.what());
  }
  auto m = std::make_unique<Model>(cfg, seed);
  GetModel(a, *m, "");
  return m;
}

double AugTypeAccuracy(const Model &model, const std::vector<AugmentedSample> &samples,
                       const AugmentPolicy &policy, std::size_t batch_size) {
  if (!model.has_augtype()) throw UsageError("model has no augmentation-type classifier");
  if (samples.empty()) throw ValidationError("aux accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); i += batch_size) {
    std::vector<const LogMelSpectrogram *> specs;
    std::vector<int> truth;
    for (std::size_t j = i; j < std::min(samples.size(), i + batch_size); ++j) {
      specs.push_back(&samples[j].features);
      truth.push_back(policy.AuxLabel(samples[j].aug_type));
    }
    auto seq = Model::Sequence(model.Encode(model.Normalize(model.Input(specs))));
    auto pred = ArgMaxRows(model.ClassifyAugType(seq, false, nullptr));
    for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == truth[k];
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

FitResult Fit(const Corpus &train, const Corpus &val, const Corpus *unlabeled,
              const ModelConfig &model_config, const TrainConfig &tc, const AugmentPolicy &policy,
              FeatureBank &bank, std::uint64_t seed, const FitOptions &options) {
  tc.Validate();
  policy.Validate();
  if (train.CountLabeled() == 0) throw ProtocolError("fit: no labeled training data");
  if (val.CountLabeled() == 0) throw ProtocolError("fit: no labeled validation data");
  if (model_config.use_aux_augtype && model_config.n_aug_classes != policy.NumAuxClasses())
    throw ConfigError("model.n_aug_classes", "does not match the augmentation policy");

  // Labeled rows train; unlabeled rows join the unlabeled pool.
  std::vector<std::size_t> lab_idx, unl_idx;
  for (std::size_t i = 0; i < train.size(); ++i)
    (IsLabeled(train[i].emotion) ? lab_idx : unl_idx).push_back(i);
  const Corpus labeled = train.Subset(lab_idx);
  std::vector<Utterance> pool_utts;
  for (auto i : unl_idx) pool_utts.push_back(train[i]);
  if (unlabeled)
    for (const auto &u : unlabeled->utterances()) pool_utts.push_back(u);
  const Corpus pool(train.name() + "+unlabeled", std::move(pool_utts));
  const Corpus pool_unlabeled = pool.AsUnlabeled();

  AugmentPolicy pool_policy = policy;
  pool_policy.mixup = 0;
  if (pool_policy.none + pool_policy.speed + pool_policy.specaugment == 0) pool_policy.none = 1;

  const bool use_pool = model_config.lambda1 > 0.0 &&
                        (model_config.use_aux_augtype || model_config.use_aux_reconstruction);
  const Rng root(seed);
  auto source = bank.AsSource();
  std::vector<AugmentedSample> lab_set, unl_set;
  auto build_sets = [&](int epoch) {
    const Rng r = tc.regenerate_augmentations ? root.Derive(200).Derive(static_cast<std::uint64_t>(epoch))
                                              : root.Derive(200);
    lab_set = BuildAugmentedSet(labeled, policy, source, r.Derive(0));
    unl_set = !use_pool || pool_unlabeled.empty() ? std::vector<AugmentedSample>{}
                                     : BuildAugmentedSet(pool_unlabeled, pool_policy, source, r.Derive(1));
  };
  build_sets(0);

  auto model = std::make_unique<Model>(model_config, seed);
  {
    std::vector<LogMelSpectrogram> originals;
    for (const auto &u : labeled.utterances()) originals.push_back(bank.Get(u));
    std::vector<const LogMelSpectrogram *> ptrs;
    for (const auto &s : originals) ptrs.push_back(&s);
    model->FitNormalization(ptrs);
  }

  std::vector<LogMelSpectrogram> val_specs;
  std::vector<int> val_truth;
  for (const auto &u : val.utterances()) {
    if (!IsLabeled(u.emotion)) continue;
    val_specs.push_back(bank.Get(u));
    val_truth.push_back(EmotionIndex(u.emotion));
  }
  std::vector<const LogMelSpectrogram *> val_ptrs;
  for (const auto &s : val_specs) val_ptrs.push_back(&s);

  ad::Adam adam(tc.lr);
  PlateauSchedule schedule(tc.lr, tc.min_lr, tc.patience, tc.lr_factor);
  Snapshot best;
  FitResult result;
  int start_epoch = 0;

  if (options.checkpoint && options.resume && std::filesystem::exists(*options.checkpoint)) {
    auto a = ad::Archive::Load(*options.checkpoint);
    const auto &meta = a.meta();
    if (meta.value("config_hash", std::string()) != options.config_hash)
      throw ConfigMismatchError("checkpoint config hash " + meta.value("config_hash", std::string()) +
                                " does not match " + options.config_hash);
    if (meta.value("seed", std::uint64_t{0}) != seed)
      throw ConfigMismatchError("checkpoint seed does not match");
    GetModel(a, *model, "");
    ad::AdamState st;
    const auto &aj = meta.at("adam");
    st.lr = aj.at("lr");
    st.beta1 = aj.at("beta1");
    st.beta2 = aj.at("beta2");
    st.eps = aj.at("eps");
    st.step = aj.at("step");
    for (auto it = aj.at("param_steps").begin(); it != aj.at("param_steps").end(); ++it) {
      ad::AdamMoments mom;
      mom.m = a.Get("adam_m/" + it.key()).data;
      mom.v = a.Get("adam_v/" + it.key()).data;
      mom.step = it.value();
      st.moments[it.key()] = std::move(mom);
    }
    adam = ad::Adam(std::move(st));
    schedule.set_state(ScheduleFromJson(meta.at("schedule")));
    if (meta.at("has_best").get<bool>()) {
      for (const auto &e : model->params().entries()) best.params.push_back(a.Get("best/param/" + e.name).data);
      best.centers = a.Get("best/centers").data;
    }
    result.history = History::FromJson(meta.at("history"));
    start_epoch = meta.at("next_epoch");
    if (tc.regenerate_augmentations) build_sets(start_epoch);
    LogInfo("fit_resume", {{"epoch", start_epoch}, {"path", options.checkpoint->string()}});
  }

  const auto bs = static_cast<std::size_t>(tc.batch_size);
  int epoch = start_epoch;
  for (; epoch < tc.max_epochs && !schedule.state().halt; ++epoch) {
    if (options.stop_after_epochs > 0 && epoch >= options.stop_after_epochs) {
      result.interrupted = true;
      break;
    }
    if (tc.regenerate_augmentations && epoch != start_epoch) build_sets(epoch);
    Rng erng = root.Derive(1000 + static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order(lab_set.size()), uorder(unl_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::iota(uorder.begin(), uorder.end(), 0);
    std::shuffle(order.begin(), order.end(), erng.engine());
    std::shuffle(uorder.begin(), uorder.end(), erng.engine());
    Rng drop = erng.Derive(1);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = adam.lr();
    std::vector<int> aux_pred, aux_truth;
    std::size_t ucursor = 0;
    int step = 0;
    for (std::size_t b = 0; b < order.size(); b += bs) {
      std::vector<const AugmentedSample *> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + bs); ++i) batch.push_back(&lab_set[order[i]]);
      auto loss = Step(*model, adam, batch, BatchMode::kLabeled, policy, drop, &aux_pred, &aux_truth);
      Accumulate(rec.labeled, loss);
      ++rec.labeled_steps;
      if (options.keep_step_records) result.history.steps.push_back({epoch, step++, BatchMode::kLabeled, loss});
      for (int u = 0; u < tc.unlabeled_per_labeled && !uorder.empty(); ++u) {
        std::vector<const AugmentedSample *> ub;
        for (std::size_t i = 0; i < std::min(bs, uorder.size()); ++i) {
          ub.push_back(&unl_set[uorder[ucursor]]);
          ucursor = (ucursor + 1) % uorder.size();
        }
        auto uloss = Step(*model, adam, ub, BatchMode::kUnlabeled, pool_policy, drop, &aux_pred, &aux_truth);
        Accumulate(rec.unlabeled, uloss);
        ++rec.unlabeled_steps;
        if (options.keep_step_records)
          result.history.steps.push_back({epoch, step++, BatchMode::kUnlabeled, uloss});
      }
    }
    Divide(rec.labeled, rec.labeled_steps);
    Divide(rec.unlabeled, rec.unlabeled_steps);
    if (!aux_truth.empty()) {
      std::size_t ok = 0;
      for (std::size_t i = 0; i < aux_truth.size(); ++i) ok += aux_pred[i] == aux_truth[i];
      rec.aux_train_accuracy = static_cast<double>(ok) / static_cast<double>(aux_truth.size());
    }

    ConfusionMatrix cm(model_config.n_classes);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < val_ptrs.size(); b += bs) {
      const std::size_t e = std::min(val_ptrs.size(), b + bs);
      std::vector<const LogMelSpectrogram *> vb(val_ptrs.begin() + static_cast<std::ptrdiff_t>(b),
                                                val_ptrs.begin() + static_cast<std::ptrdiff_t>(e));
      std::vector<int> truth(val_truth.begin() + static_cast<std::ptrdiff_t>(b),
                             val_truth.begin() + static_cast<std::ptrdiff_t>(e));
      auto logits = model->EmotionLogits(model->Input(vb));
      loss_sum += ad::SoftmaxCrossEntropy<float>(logits, OneHotRows(truth, model_config.n_classes)).item() *
                  static_cast<double>(e - b);
      auto pred = ArgMaxRows(logits);
      for (std::size_t i = 0; i < pred.size(); ++i) cm.Add(truth[i], pred[i]);
    }
    rec.val_uar = tc.val_metric_uar ? Uar(cm) : WeightedAccuracy(cm);
    rec.val_loss = loss_sum / static_cast<double>(val_ptrs.size());

    const auto ev = tc.val_loss_tiebreak ? schedule.Observe(epoch, rec.val_uar, rec.val_loss)
                                         : schedule.Observe(epoch, rec.val_uar);
    rec.event = ScheduleEventName(ev);
    if (ev == ScheduleEvent::kImproved) {
      best.params = model->params().Snapshot();
      best.centers = model->centers();
    } else if (ev == ScheduleEvent::kHalved || ev == ScheduleEvent::kHalted) {
      model->params().Restore(best.params);
      model->centers() = best.centers;
      if (ev == ScheduleEvent::kHalved) adam.set_lr(schedule.state().lr);
    }
    result.history.epochs.push_back(rec);
    LogDebug("epoch", {{"epoch", epoch},
                       {"lr", rec.lr},
                       {"l_mt", rec.labeled.l_mt},
                       {"val_uar", rec.val_uar},
                       {"event", rec.event}});
    if (options.checkpoint)
      SaveTrainingCheckpoint(*options.checkpoint, *model, adam.state(), schedule.state(), best,
                             result.history, epoch + 1, seed, options.config_hash);
  }
  result.epochs_run = epoch - start_epoch;
  if (!result.interrupted && !best.params.empty()) {
    model->params().Restore(best.params);
    model->centers() = best.centers;
  }
  result.history.best_epoch = schedule.state().best_epoch;
  result.history.best_val_uar = schedule.state().best_val;
  result.model = std::move(model);
  return result;
}

}  // namespace mtlaug
