// core/src/eval.cc

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

#include "mtlaug/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "mtlaug/error.h"
#include "mtlaug/log.h"
#include "mtlaug/parallel.h"
#include "mtlaug/rng.h"
#include "mtlaug/synth.h"
#include "mtlaug/waveform.h"

namespace mtlaug {

using nlohmann::json;

namespace {

std::string Fmt(const char *fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

json ConfusionJson(const ConfusionMatrix &cm) { return cm.Rows(); }

ConfusionMatrix ConfusionFromJson(const json &j) {
  return ConfusionMatrix::FromRows(j.get<std::vector<std::vector<std::int64_t>>>());
}

double UarOrZero(const ConfusionMatrix &cm) { return cm.total() == 0 ? 0.0 : Uar(cm); }

}  // namespace

void ArmReport::Finalize() {
  std::vector<double> v;
  for (auto &r : repeats) {
    r.confusion = ConfusionMatrix(r.folds.empty() ? kNumEmotions : r.folds.front().confusion.k());
    for (const auto &f : r.folds) r.confusion.Merge(f.confusion);
    r.uar = UarOrZero(r.confusion);
    v.push_back(r.uar);
  }
  mean = v.empty() ? 0.0 : Mean(v);
  std = v.size() < 2 ? 0.0 : SampleStd(v);
}

const ArmReport &ExperimentReport::Arm(const std::string &name) const {
  for (const auto &a : arms)
    if (a.name == name) return a;
  throw UsageError("report has no arm '" + name + "'");
}

ArmReport *ExperimentReport::FindArm(const std::string &name) {
  for (auto &a : arms)
    if (a.name == name) return &a;
  return nullptr;
}

json ExperimentReport::ToJson() const {
  json j;
  j["protocol"] = protocol;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["n_repeats"] = n_repeats;
  j["wall_clock_s"] = wall_clock_s;
  j["meta"] = meta;
  j["arms"] = json::array();
  for (const auto &a : arms) {
    json ja{{"name", a.name}, {"mean", a.mean}, {"std", a.std}, {"extras", a.extras}};
    ja["repeats"] = json::array();
    for (const auto &r : a.repeats) {
      json jr{{"repeat", r.repeat}, {"seed", r.seed}, {"uar", r.uar},
              {"confusion", ConfusionJson(r.confusion)}};
      jr["folds"] = json::array();
      for (const auto &f : r.folds)
        jr["folds"].push_back({{"fold", f.fold}, {"uar", f.uar}, {"confusion", ConfusionJson(f.confusion)}});
      ja["repeats"].push_back(std::move(jr));
    }
    j["arms"].push_back(std::move(ja));
  }
  j["models"] = json::array();
  for (const auto &m : models)
    j["models"].push_back({{"arm", m.arm},
                           {"repeat", m.repeat},
                           {"fold", m.fold},
                           {"seed", m.seed},
                           {"validation", m.validation},
                           {"n_train", m.n_train},
                           {"n_val", m.n_val},
                           {"n_test", m.n_test},
                           {"epochs", m.epochs},
                           {"best_epoch", m.best_epoch},
                           {"best_val", m.best_val},
                           {"checksum", m.checksum}});
  return j;
}

ExperimentReport ExperimentReport::FromJson(const json &j) {
  try {
    ExperimentReport r;
    r.protocol = j.at("protocol");
    r.config_hash = j.at("config_hash");
    r.seed = j.at("seed");
    r.n_repeats = j.at("n_repeats");
    r.wall_clock_s = j.at("wall_clock_s");
    r.meta = j.value("meta", json::object());
    for (const auto &ja : j.at("arms")) {
      ArmReport a;
      a.name = ja.at("name");
      a.mean = ja.at("mean");
      a.std = ja.at("std");
      a.extras = ja.value("extras", std::map<std::string, double>{});
      for (const auto &jr : ja.at("repeats")) {
        RepeatResult rr;
        rr.repeat = jr.at("repeat");
        rr.seed = jr.at("seed");
        rr.uar = jr.at("uar");
        rr.confusion = ConfusionFromJson(jr.at("confusion"));
        for (const auto &jf : jr.at("folds"))
          rr.folds.push_back({jf.at("fold"), ConfusionFromJson(jf.at("confusion")), jf.at("uar")});
        a.repeats.push_back(std::move(rr));
      }
      r.arms.push_back(std::move(a));
    }
    for (const auto &jm : j.value("models", json::array())) {
      ModelProvenance m;
      m.arm = jm.at("arm");
      m.repeat = jm.at("repeat");
      m.fold = jm.at("fold");
      m.seed = jm.at("seed");
      m.validation = jm.at("validation");
      m.n_train = jm.at("n_train");
      m.n_val = jm.at("n_val");
      m.n_test = jm.at("n_test");
      m.epochs = jm.at("epochs");
      m.best_epoch = jm.at("best_epoch");
      m.best_val = jm.at("best_val");
      m.checksum = jm.at("checksum");
      r.models.push_back(std::move(m));
    }
    return r;
  } catch (const json::exception &e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

std::string ExperimentReport::Csv() const {
  std::ostringstream os;
  os << "protocol,arm,repeat,fold,uar\n";
  for (const auto &a : arms)
    for (const auto &r : a.repeats) {
      for (const auto &f : r.folds)
        os << protocol << ',' << a.name << ',' << r.repeat << ',' << f.fold << ','
           << Fmt("%.6f", f.uar) << '\n';
      os << protocol << ',' << a.name << ',' << r.repeat << ",pooled," << Fmt("%.6f", r.uar) << '\n';
    }
  return os.str();
}

Corpus MaterializeCorpus(const CorpusSource &source, const std::filesystem::path &cache_root) {
  if (!source.is_synthetic()) {
    if (!std::filesystem::exists(source.manifest))
      throw MissingCorpusError("manifest not found: " + source.manifest);
    ManifestOptions mo;
    mo.merge_excited_into_happy = source.merge_excited_into_happy;
    return LoadManifest(source.manifest, mo);
  }
  const auto dir = cache_root / "corpora" / HashHex(ToJson(source.synth).dump());
  const auto manifest = dir / "manifest.csv";
  if (std::filesystem::exists(manifest)) {
    auto c = LoadManifest(manifest);
    bool complete = true;
    for (const auto &u : c.utterances()) complete = complete && std::filesystem::exists(u.audio_path);
    if (complete) return c;
  }
  // Render aside, then rename into place.
  auto tmp = dir;
  tmp += ".tmp";
  std::filesystem::remove_all(tmp);
  SynthCorpus(source.synth, tmp);
  std::filesystem::remove_all(dir);
  std::filesystem::rename(tmp, dir);
  return LoadManifest(manifest);
}

ConfusionMatrix EvaluateFeatures(const Model &model,
                                 const std::vector<const LogMelSpectrogram *> &specs,
                                 const std::vector<int> &labels, std::size_t batch_size) {
  if (specs.size() != labels.size()) throw ShapeError("evaluate: specs and labels differ in length");
  ConfusionMatrix cm(model.config().n_classes);
  auto pred = model.Predict(specs, batch_size);
  for (std::size_t i = 0; i < pred.size(); ++i) cm.Add(labels[i], pred[i]);
  return cm;
}

namespace {

struct LabeledSet {
  std::vector<LogMelSpectrogram> specs;
  std::vector<int> labels;
  std::vector<const LogMelSpectrogram *> ptrs() const {
    std::vector<const LogMelSpectrogram *> p;
    for (const auto &s : specs) p.push_back(&s);
    return p;
  }
};

LabeledSet Featurize(const Corpus &test, FeatureBank &bank) {
  LabeledSet s;
  for (const auto &u : test.utterances()) {
    if (!IsLabeled(u.emotion)) continue;
    s.specs.push_back(bank.Get(u));
    s.labels.push_back(EmotionIndex(u.emotion));
  }
  return s;
}

}  // namespace

ConfusionMatrix EvaluateModel(const Model &model, const Corpus &test, FeatureBank &bank,
                              std::size_t batch_size) {
  auto set = Featurize(test, bank);
  return EvaluateFeatures(model, set.ptrs(), set.labels, batch_size);
}

ExperimentConfig WithAblationRow(const ExperimentConfig &config, int row) {
  ExperimentConfig c = config;
  c.model = ModelConfig::Ablation(row, c.model);
  if (!c.model.use_aux_augtype) {
    c.policy.none = std::max(1, c.policy.none);
    c.policy.speed = c.policy.specaugment = c.policy.mixup = 0;
    c.policy.binary_aux = false;
  }
  c.model = c.ResolvedModel();
  c.Validate();
  return c;
}

void CheckDisjoint(const std::vector<const Corpus *> &splits) {
  std::set<std::string> seen;
  for (const auto *c : splits)
    for (const auto &u : c->utterances())
      if (!seen.insert(u.id).second) throw ProtocolError("utterance '" + u.id + "' leaks across splits");
}

Corpus SubsampleLabels(const Corpus &corpus, double fraction, std::uint64_t seed,
                       bool remainder_unlabeled) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("label fraction must lie in (0, 1]");
  if (fraction == 1.0) return corpus;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (IsLabeled(corpus[i].emotion))
      cells[{corpus[i].speaker_id, EmotionIndex(corpus[i].emotion)}].push_back(i);
  Rng rng(seed);
  std::vector<bool> keep(corpus.size(), true);
  for (auto &[cell, idx] : cells) {
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * idx.size())));
    for (std::size_t k = n; k < idx.size(); ++k) keep[idx[k]] = false;
  }
  std::vector<Utterance> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (keep[i]) {
      out.push_back(corpus[i]);
    } else if (remainder_unlabeled) {
      Utterance u = corpus[i];
      u.emotion = Emotion::kUnlabeled;
      out.push_back(std::move(u));
    }
  }
  return Corpus(corpus.name(), std::move(out));
}

namespace {

struct Task {
  int repeat = 0;
  std::uint64_t repeat_seed = 0;
  std::string fold;
  std::uint64_t seed = 0;
  std::string validation;
  Corpus train, val, test;
};

struct TaskOutput {
  ProbeOutput probe;
  ModelProvenance provenance;
};

ProbeOutput CleanProbe(const ProbeContext &ctx, const ExperimentConfig &config,
                       const std::string &arm) {
  ProbeOutput out;
  auto set = Featurize(ctx.test, ctx.bank);
  out.arms[arm] = EvaluateFeatures(ctx.model, set.ptrs(), set.labels,
                                   static_cast<std::size_t>(config.train.batch_size));
  if (ctx.model.has_augtype() && set.labels.size() >= 1) {
    AugmentPolicy p = config.policy;
    std::size_t labeled = ctx.test.CountLabeled();
    if (labeled < 2) p.mixup = 0;
    auto aug = BuildAugmentedSet(ctx.test, p, ctx.bank.AsSource(), Rng(ctx.seed).Derive(7));
    out.extras["aux_accuracy"] = AugTypeAccuracy(ctx.model, aug, p,
                                                 static_cast<std::size_t>(config.train.batch_size));
  }
  return out;
}

TaskOutput RunTask(const Task &t, const Corpus *unlabeled, const ExperimentConfig &config,
                   FeatureBank &bank, const Probe &probe, const std::string &arm) {
  CheckDisjoint({&t.train, &t.val, &t.test});
  if (unlabeled) CheckDisjoint({unlabeled, &t.test});
  FitOptions fo;
  fo.config_hash = config.Hash();
  auto fit = Fit(t.train, t.val, unlabeled, config.ResolvedModel(), config.train, config.policy, bank,
                 t.seed, fo);
  const Model &model = *fit.model;
  const auto before = model.Checksum();
  ProbeContext ctx{model, t.test, bank, t.seed};
  TaskOutput out;
  out.probe = probe ? probe(ctx) : CleanProbe(ctx, config, arm);
  if (model.Checksum() != before) throw ProtocolError("evaluation modified the model");
  auto &p = out.provenance;
  p.arm = arm;
  p.repeat = t.repeat;
  p.fold = t.fold;
  p.seed = t.seed;
  p.validation = t.validation;
  p.n_train = t.train.size();
  p.n_val = t.val.size();
  p.n_test = t.test.size();
  p.epochs = fit.epochs_run;
  p.best_epoch = fit.history.best_epoch;
  p.best_val = fit.history.best_val_uar;
  p.checksum = before;
  LogInfo("task_done", {{"arm", arm},
                        {"repeat", t.repeat},
                        {"fold", t.fold},
                        {"epochs", fit.epochs_run},
                        {"best_val", fit.history.best_val_uar}});
  return out;
}

ExperimentReport RunTasks(const std::string &protocol, const std::vector<Task> &tasks,
                          const Corpus *unlabeled, const ExperimentConfig &config,
                          FeatureBank &bank, const EvalOptions &options) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<TaskOutput> outputs(tasks.size());
  ParallelFor(tasks.size(), options.jobs, [&](std::size_t i) {
    outputs[i] = RunTask(tasks[i], options.ignore_unlabeled ? nullptr : unlabeled, config, bank,
                         options.probe, options.arm);
  });
  ExperimentReport rep;
  rep.protocol = protocol;
  rep.config_hash = config.Hash();
  rep.seed = config.seed;
  rep.n_repeats = config.protocol.n_repeats;
  std::map<std::string, std::map<std::string, std::pair<double, int>>> extras;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto &t = tasks[i];
    for (const auto &[name, cm] : outputs[i].probe.arms) {
      ArmReport *arm = rep.FindArm(name);
      if (!arm) {
        rep.arms.push_back(ArmReport{});
        arm = &rep.arms.back();
        arm->name = name;
      }
      if (arm->repeats.empty() || arm->repeats.back().repeat != t.repeat) {
        RepeatResult rr;
        rr.repeat = t.repeat;
        rr.seed = t.repeat_seed;
        arm->repeats.push_back(std::move(rr));
      }
      arm->repeats.back().folds.push_back({t.fold, cm, UarOrZero(cm)});
      for (const auto &[k, v] : outputs[i].probe.extras) {
        auto &acc = extras[name][k];
        acc.first += v;
        ++acc.second;
      }
    }
    rep.models.push_back(outputs[i].provenance);
  }
  for (auto &a : rep.arms) {
    a.Finalize();
    for (const auto &[k, acc] : extras[a.name]) a.extras[k] = acc.first / acc.second;
  }
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < config.protocol.n_repeats; ++r) seeds.push_back(config.seed + static_cast<std::uint64_t>(r));
  rep.meta["seeds"] = seeds;
  rep.meta["label_fraction"] = options.label_fraction;
  rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

void Merge(ExperimentReport &dst, ExperimentReport src) {
  for (auto &a : src.arms) dst.arms.push_back(std::move(a));
  for (auto &m : src.models) dst.models.push_back(std::move(m));
  dst.wall_clock_s += src.wall_clock_s;
}

}  // namespace

ExperimentReport LosoEvaluate(const Corpus &corpus, const Corpus *unlabeled,
                              const ExperimentConfig &config, FeatureBank &bank,
                              const EvalOptions &options) {
  config.Validate();
  if (corpus.speakers().size() < 2) throw ProtocolError("LOSO needs at least two speakers");
  auto folds = SplitLoso(corpus);
  if (config.protocol.max_folds > 0 && folds.size() > static_cast<std::size_t>(config.protocol.max_folds))
    folds.resize(static_cast<std::size_t>(config.protocol.max_folds));
  std::vector<Task> tasks;
  for (int r = 0; r < config.protocol.n_repeats; ++r) {
    const std::uint64_t rs = config.seed + static_cast<std::uint64_t>(r);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto &fold = folds[f];
      Task t;
      t.repeat = r;
      t.repeat_seed = rs;
      t.fold = fold.test_speaker;
      t.seed = SplitMix64(rs * 1000003u + f);
      t.test = fold.test;
      const auto &spk = fold.train.speakers();
      if (spk.size() >= 2) {
        // Validation speaker rotates with the repeat index.
        const auto &vs = spk[static_cast<std::size_t>(r) % spk.size()];
        std::set<std::string> rest(spk.begin(), spk.end());
        rest.erase(vs);
        t.val = fold.train.FilterSpeakers({vs});
        t.train = fold.train.FilterSpeakers(rest);
        t.validation = "speaker:" + vs;
      } else {
        auto split = SplitRandom(fold.train, config.protocol.val_fraction, config.seed + f);
        t.val = split.val;
        t.train = split.test;
        t.validation = "random";
      }
      if (options.label_fraction != 1.0)
        t.train = SubsampleLabels(t.train, options.label_fraction, SplitMix64(config.seed * 7919u + f),
                                  config.protocol.fraction_remainder_unlabeled);
      tasks.push_back(std::move(t));
    }
  }
  return RunTasks("loso", tasks, unlabeled, config, bank, options);
}

ExperimentReport CrossCorpusEvaluate(const Corpus &source, const Corpus &target,
                                     const Corpus *unlabeled, const ExperimentConfig &config,
                                     FeatureBank &bank, const std::string &direction,
                                     const EvalOptions &options) {
  config.Validate();
  auto split = SplitRandom(target, config.protocol.val_fraction, config.seed,
                           config.protocol.speaker_disjoint_split);
  std::set<std::string> held;
  for (const auto *c : {&split.val, &split.test})
    for (const auto &u : c->utterances()) held.insert(u.id);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < source.size(); ++i)
    if (!held.count(source[i].id)) keep.push_back(i);
  Corpus train = source.Subset(keep);
  // Same corpus on both sides: carve the training share out of the test part.
  const bool within = train.empty() && source.size() == target.size();
  if (within) {
    const double f = config.protocol.val_fraction;
    if (f >= 0.5) throw ProtocolError("source equals target: val_fraction must be below 0.5");
    auto rest = SplitRandom(split.test, f / (1.0 - f), config.seed + 1,
                            config.protocol.speaker_disjoint_split);
    split.test = std::move(rest.val);
    train = std::move(rest.test);
  }
  std::vector<Task> tasks;
  for (int r = 0; r < config.protocol.n_repeats; ++r) {
    Task t;
    t.repeat = r;
    t.repeat_seed = config.seed + static_cast<std::uint64_t>(r);
    t.fold = "test";
    t.seed = SplitMix64(t.repeat_seed * 1000003u);
    t.validation = "target:" + Fmt("%g", config.protocol.val_fraction);
    t.train = options.label_fraction != 1.0
                  ? SubsampleLabels(train, options.label_fraction, SplitMix64(config.seed * 7919u),
                                    config.protocol.fraction_remainder_unlabeled)
                  : train;
    t.val = split.val;
    t.test = split.test;
    tasks.push_back(std::move(t));
  }
  EvalOptions o = options;
  o.arm = direction;
  auto rep = RunTasks("cross", tasks, unlabeled, config, bank, o);
  rep.meta["direction"] = direction;
  rep.meta["within"] = within;
  rep.meta["source"] = source.name();
  rep.meta["target"] = target.name();
  return rep;
}

std::vector<Waveform> LoadNoisePool(const std::string &noise_dir, std::uint64_t seed,
                                    int sample_rate) {
  std::vector<Waveform> pool;
  if (noise_dir.empty()) {
    for (int kind = 0; kind < 4; ++kind)
      pool.push_back(SynthNoise(kind, 10.0, SplitMix64(seed + static_cast<std::uint64_t>(kind)), sample_rate));
    return pool;
  }
  if (!std::filesystem::is_directory(noise_dir))
    throw MissingCorpusError("noise directory not found: " + noise_dir);
  std::vector<std::filesystem::path> files;
  for (const auto &e : std::filesystem::directory_iterator(noise_dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto &f : files) pool.push_back(ReadWav(f));
  if (pool.empty()) throw ProtocolError("noise directory holds no .wav files: " + noise_dir);
  return pool;
}

std::string SnrArmName(double snr) {
  if (std::isinf(snr) && snr > 0) return "clean";
  return "snr=" + Fmt("%g", snr);
}

std::map<double, ConfusionMatrix> NoisyEvaluate(const Model &model, const Corpus &test,
                                                const std::vector<Waveform> &noise_pool,
                                                const std::vector<double> &snrs,
                                                FeatureBank &bank, std::uint64_t seed) {
  if (noise_pool.empty()) throw ProtocolError("empty noise pool");
  std::map<double, LabeledSet> sets;
  const Rng root(seed);
  std::size_t i = 0;
  for (const auto &u : test.utterances()) {
    if (!IsLabeled(u.emotion)) continue;
    Rng rng = root.Derive(i++);
    const auto &noise = noise_pool[static_cast<std::size_t>(
        rng.UniformInt(0, static_cast<std::int64_t>(noise_pool.size()) - 1))];
    const auto offset = static_cast<std::size_t>(
        rng.UniformInt(0, static_cast<std::int64_t>(noise.samples.size()) - 1));
    std::optional<Waveform> clean;
    Waveform excerpt;
    for (double snr : snrs) {
      auto &set = sets[snr];
      set.labels.push_back(EmotionIndex(u.emotion));
      if (std::isinf(snr) && snr > 0) {
        set.specs.push_back(bank.Get(u));
        continue;
      }
      if (!clean) {
        if (!std::filesystem::exists(u.audio_path))
          throw MissingCorpusError("audio file not found: " + u.audio_path.string());
        clean = ReadWav(u.audio_path);
        excerpt.sample_rate = clean->sample_rate;
        excerpt.samples.resize(clean->samples.size());
        for (std::size_t k = 0; k < excerpt.samples.size(); ++k)
          excerpt.samples[k] = noise.samples[(offset + k) % noise.samples.size()];
      }
      set.specs.push_back(bank.Extract(MixAtSnr(*clean, excerpt, snr).mixed));
    }
  }
  std::map<double, ConfusionMatrix> out;
  for (double snr : snrs) {
    auto &set = sets[snr];
    out[snr] = EvaluateFeatures(model, set.ptrs(), set.labels);
  }
  return out;
}

AdversarialResult AdversarialEvaluate(const Model &model, const Corpus &test, FeatureBank &bank,
                                      const std::vector<AttackParams> &attacks,
                                      std::size_t batch_size) {
  auto set = Featurize(test, bank);
  AdversarialResult r;
  r.clean = EvaluateFeatures(model, set.ptrs(), set.labels, batch_size);
  for (const auto &a : attacks) {
    a.Validate();
    ConfusionMatrix cm(model.config().n_classes);
    for (std::size_t b = 0; b < set.specs.size(); b += batch_size) {
      const std::size_t e = std::min(set.specs.size(), b + batch_size);
      std::vector<const LogMelSpectrogram *> specs;
      std::vector<int> labels(set.labels.begin() + static_cast<std::ptrdiff_t>(b),
                              set.labels.begin() + static_cast<std::ptrdiff_t>(e));
      for (std::size_t i = b; i < e; ++i) specs.push_back(&set.specs[i]);
      auto adv = Attack(model, specs, labels, a);
      for (std::size_t i = 0; i < adv.size(); ++i)
        r.max_linf = std::max(r.max_linf, LinfDistance(adv[i], *specs[i]));
      std::vector<const LogMelSpectrogram *> aptr;
      for (const auto &x : adv) aptr.push_back(&x);
      cm.Merge(EvaluateFeatures(model, aptr, labels, batch_size));
    }
    r.attacked[AttackKindName(a.kind)] = cm;
  }
  return r;
}

ExperimentReport NoiseProtocol(const Corpus &corpus, const Corpus *unlabeled,
                               const ExperimentConfig &config, FeatureBank &bank,
                               const EvalOptions &options) {
  const auto pool = LoadNoisePool(config.noise_dir, config.seed, bank.config().sample_rate);
  std::vector<double> snrs{kCleanSnr};
  for (double s : config.protocol.snrs) snrs.push_back(s);
  EvalOptions o = options;
  o.probe = [&](const ProbeContext &ctx) {
    ProbeOutput out;
    for (auto &[snr, cm] : NoisyEvaluate(ctx.model, ctx.test, pool, snrs, ctx.bank, ctx.seed))
      out.arms[SnrArmName(snr)] = cm;
    return out;
  };
  auto rep = LosoEvaluate(corpus, unlabeled, config, bank, o);
  rep.protocol = "noise";
  rep.meta["snrs"] = config.protocol.snrs;
  rep.meta["noise"] = config.noise_dir.empty() ? "synthetic" : config.noise_dir;
  return rep;
}

ExperimentReport AttackProtocol(const Corpus &corpus, const Corpus *unlabeled,
                                const ExperimentConfig &config, FeatureBank &bank,
                                const EvalOptions &options) {
  AttackParams fgsm{AttackKind::kFgsm, config.protocol.epsilon, 1, 0.0};
  AttackParams bim{AttackKind::kBim, config.protocol.epsilon, config.protocol.bim_steps,
                   config.protocol.bim_step_size};
  fgsm.Validate();
  bim.Validate();
  EvalOptions o = options;
  o.probe = [&](const ProbeContext &ctx) {
    auto r = AdversarialEvaluate(ctx.model, ctx.test, ctx.bank, {fgsm, bim},
                                 static_cast<std::size_t>(config.train.batch_size));
    ProbeOutput out;
    out.arms["clean"] = r.clean;
    for (auto &[k, cm] : r.attacked) out.arms[k] = cm;
    out.extras["max_linf"] = r.max_linf;
    return out;
  };
  auto rep = LosoEvaluate(corpus, unlabeled, config, bank, o);
  rep.protocol = "attack";
  rep.meta["epsilon"] = config.protocol.epsilon;
  rep.meta["bim_steps"] = config.protocol.bim_steps;
  rep.meta["bim_step_size"] = bim.EffectiveStepSize();
  return rep;
}

ExperimentReport StudyAugmentation(const Corpus &corpus, const Corpus *unlabeled,
                                   const ExperimentConfig &config, FeatureBank &bank,
                                   const EvalOptions &options) {
  ExperimentReport rep;
  rep.protocol = "study-aug";
  rep.config_hash = config.Hash();
  rep.seed = config.seed;
  rep.n_repeats = config.protocol.n_repeats;
  const std::pair<const char *, AugmentationType> singles[] = {
      {"speed", AugmentationType::kSpeed},
      {"specaugment", AugmentationType::kSpecAugment},
      {"mixup", AugmentationType::kMixup}};
  for (const auto &[name, type] : singles) {
    ExperimentConfig c = config;
    c.policy.speed = type == AugmentationType::kSpeed ? std::max(1, config.policy.speed) : 0;
    c.policy.specaugment = type == AugmentationType::kSpecAugment ? std::max(1, config.policy.specaugment) : 0;
    c.policy.mixup = type == AugmentationType::kMixup ? std::max(1, config.policy.mixup) : 0;
    c.policy.none = std::max(1, config.policy.none);
    c.policy.binary_aux = true;
    c.model = c.ResolvedModel();
    EvalOptions o = options;
    o.arm = name;
    Merge(rep, LosoEvaluate(corpus, unlabeled, c, bank, o));
  }
  ExperimentConfig all = config;
  all.policy.binary_aux = false;
  all.model = all.ResolvedModel();
  EvalOptions o = options;
  o.arm = "all";
  Merge(rep, LosoEvaluate(corpus, unlabeled, all, bank, o));
  return rep;
}

ExperimentReport StudyLabelFraction(const Corpus &corpus, const Corpus *unlabeled,
                                    const ExperimentConfig &config, FeatureBank &bank,
                                    const EvalOptions &options) {
  ExperimentReport rep;
  rep.protocol = "study-fraction";
  rep.config_hash = config.Hash();
  rep.seed = config.seed;
  rep.n_repeats = config.protocol.n_repeats;
  for (double f : config.protocol.fractions) {
    EvalOptions o = options;
    o.label_fraction = f;
    o.arm = "fraction=" + Fmt("%g", f);
    Merge(rep, LosoEvaluate(corpus, unlabeled, config, bank, o));
  }
  rep.meta["fractions"] = config.protocol.fractions;
  return rep;
}

ExperimentReport StudyAblation(const Corpus &corpus, const Corpus &target,
                               const Corpus *unlabeled, const ExperimentConfig &config,
                               FeatureBank &bank, const EvalOptions &options) {
  ExperimentReport rep;
  rep.protocol = "study-ablation";
  rep.config_hash = config.Hash();
  rep.seed = config.seed;
  rep.n_repeats = config.protocol.n_repeats;
  for (int row = 1; row <= 5; ++row) {
    const auto c = WithAblationRow(config, row);
    const std::string tag = "row" + std::to_string(row);
    EvalOptions o = options;
    o.arm = tag + "/within";
    Merge(rep, LosoEvaluate(corpus, unlabeled, c, bank, o));
    Merge(rep, CrossCorpusEvaluate(corpus, target, unlabeled, c, bank, tag + "/cross", options));
  }
  return rep;
}

std::string AblationTable(const ExperimentReport &ablation) {
  std::ostringstream os;
  os << "model,aux_augtype,aux_recon,center_loss,attention,within,cross\n";
  auto cell = [&](const std::string &name) -> std::string {
    for (const auto &a : ablation.arms)
      if (a.name == name) return Fmt("%.1f", 100.0 * a.mean) + "+-" + Fmt("%.1f", 100.0 * a.std);
    return "";
  };
  for (int row = 1; row <= 5; ++row) {
    const auto m = ModelConfig::Ablation(row, ModelConfig{});
    const std::string tag = "row" + std::to_string(row);
    os << row << ',' << m.use_aux_augtype << ',' << m.use_aux_reconstruction << ','
       << m.use_center_loss << ',' << m.use_attention << ',' << cell(tag + "/within") << ','
       << cell(tag + "/cross") << '\n';
  }
  return os.str();
}

std::string FractionCurve(const ExperimentReport &study) {
  std::ostringstream os;
  os << "fraction,mean,std\n";
  for (const auto &a : study.arms) {
    if (a.name.rfind("fraction=", 0) != 0) continue;
    os << a.name.substr(9) << ',' << Fmt("%.6f", a.mean) << ',' << Fmt("%.6f", a.std) << '\n';
  }
  return os.str();
}

std::string ArmSummary(const ExperimentReport &report) {
  std::ostringstream os;
  os << "protocol,arm,mean,std\n";
  for (const auto &a : report.arms)
    os << report.protocol << ',' << a.name << ',' << Fmt("%.6f", a.mean) << ',' << Fmt("%.6f", a.std)
       << '\n';
  return os.str();
}

}  // namespace mtlaug
