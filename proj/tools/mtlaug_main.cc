// tools/mtlaug_main.cc

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

// mtlaug: corpus synthesis, feature extraction, training, evaluation
// protocols and studies driven by one JSON experiment config.
//
// Outputs land in <out>/<config-hash>/<command>/. Exit status: 0 on success,
// 2 on a config schema violation, 3 on a missing corpus, 1 otherwise.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtlaug/config.h"
#include "mtlaug/error.h"
#include "mtlaug/eval.h"
#include "mtlaug/features.h"
#include "mtlaug/log.h"
#include "mtlaug/synth.h"
#include "mtlaug/train.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mtlaug {
namespace {

struct Common {
  std::string config_path;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> sets;
  std::string log_level = "warn";
};

struct Run {
  ExperimentConfig config;
  std::string hash;
  fs::path dir;
  fs::path cache;
};

LogLevel ParseLevel(const std::string &s) {
  if (s == "debug") return LogLevel::kDebug;
  if (s == "info") return LogLevel::kInfo;
  if (s == "warn") return LogLevel::kWarn;
  if (s == "error") return LogLevel::kError;
  if (s == "off") return LogLevel::kOff;
  throw UsageError("unknown log level '" + s + "'");
}

Run Prepare(const Common &c, const std::string &command) {
  SetLogLevel(ParseLevel(c.log_level));
  json doc;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw ConfigError("--config", "cannot open " + c.config_path);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error &e) {
      throw ConfigError("--config", e.what());
    }
  } else {
    doc = ExperimentConfig{}.ToJson();
  }
  for (const auto &s : c.sets) ApplyOverride(doc, s);
  if (c.seed) doc["seed"] = *c.seed;
  Run r;
  r.config = ExperimentConfig::FromJson(doc);
  r.hash = r.config.Hash();
  r.dir = fs::path(c.out) / r.hash / command;
  fs::create_directories(r.dir);
  const char *env = std::getenv("MTLAUG_CACHE");
  r.cache = env && *env ? fs::path(env) : fs::path(c.out) / "cache";
  std::ofstream(r.dir / "config.json") << r.config.ToJson().dump(2) << "\n";
  LogInfo("start", {{"command", command}, {"hash", r.hash}, {"dir", r.dir.string()}});
  return r;
}

std::string Stamp(const Run &r) {
  return "# config=" + r.hash + " seed=" + std::to_string(r.config.seed) + "\n";
}

void WriteText(const fs::path &path, const std::string &text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
  }
  fs::rename(tmp, path);
}

void WriteJson(const fs::path &path, const Run &r, json j) {
  j["config_hash"] = r.hash;
  j["seed"] = r.config.seed;
  WriteText(path, j.dump(2) + "\n");
}

void WriteReport(const Run &r, const ExperimentReport &rep) {
  WriteJson(r.dir / "report.json", r, rep.ToJson());
  WriteText(r.dir / "metrics.csv", Stamp(r) + rep.Csv());
  WriteText(r.dir / "summary.csv", Stamp(r) + ArmSummary(rep));
  std::cout << ArmSummary(rep);
}

struct Data {
  Corpus corpus;
  std::optional<Corpus> unlabeled;
};

Data LoadData(const Run &r) {
  Data d;
  d.corpus = MaterializeCorpus(r.config.corpus, r.cache);
  if (r.config.unlabeled) d.unlabeled = MaterializeCorpus(*r.config.unlabeled, r.cache).AsUnlabeled();
  return d;
}

FeatureBank MakeBank(const Run &r) { return FeatureBank(r.config.features, r.cache / "features"); }

EvalOptions Options(const Common &c) {
  EvalOptions o;
  o.jobs = c.jobs;
  return o;
}

void CmdSynth(const Common &c) {
  auto r = Prepare(c, "synth");
  json out;
  for (const auto &[name, src] : {std::pair<std::string, CorpusSource>{"corpus", r.config.corpus},
                                  {"target", r.config.target}}) {
    auto corpus = MaterializeCorpus(src, r.cache);
    WriteManifest(corpus, r.dir / (name + ".csv"));
    out[name] = {{"utterances", corpus.size()},
                 {"speakers", corpus.speakers()},
                 {"labeled", corpus.CountLabeled()}};
  }
  WriteJson(r.dir / "synth.json", r, out);
  std::cout << out.dump(2) << "\n";
}

void CmdFeatures(const Common &c) {
  auto r = Prepare(c, "features");
  auto data = LoadData(r);
  FeatureBank bank(r.config.features);
  fs::create_directories(r.dir / "lmsp");
  WriteFeatureSidecar(r.config.features, r.dir / "lmsp" / "config.json");
  std::ostringstream index;
  index << "id,file,n_mels,frames\n";
  for (const auto &u : data.corpus.utterances()) {
    auto spec = bank.Get(u);
    const auto file = HashHex(u.id) + ".lmsp";
    WriteFeatureBlob(spec, r.dir / "lmsp" / file);
    index << u.id << ',' << file << ',' << spec.n_mels << ',' << spec.n_frames << '\n';
  }
  WriteText(r.dir / "index.csv", Stamp(r) + index.str());
  std::cout << data.corpus.size() << " feature files\n";
}

void CmdAugment(const Common &c) {
  auto r = Prepare(c, "augment");
  auto data = LoadData(r);
  auto bank = MakeBank(r);
  auto set = BuildAugmentedSet(data.corpus, r.config.policy, bank.AsSource(), Rng(r.config.seed).Derive(200));
  fs::create_directories(r.dir / "lmsp");
  WriteFeatureSidecar(r.config.features, r.dir / "lmsp" / "config.json");
  std::ostringstream index;
  index << "index,aug_type,sources,speaker,angry,happy,neutral,sad\n";
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto &s = set[i];
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.lmsp", i);
    WriteFeatureBlob(s.features, r.dir / "lmsp" / name, static_cast<std::uint8_t>(s.aug_type));
    std::string sources;
    for (const auto &id : s.source_ids) sources += (sources.empty() ? "" : "+") + id;
    index << i << ',' << AugmentationTypeName(s.aug_type) << ',' << sources << ',' << s.speaker_id;
    for (int k = 0; k < kNumEmotions; ++k)
      index << ',' << (s.emotion ? std::to_string((*s.emotion)[static_cast<std::size_t>(k)]) : "");
    index << '\n';
    ++counts[std::string(AugmentationTypeName(s.aug_type))];
  }
  WriteText(r.dir / "index.csv", Stamp(r) + index.str());
  WriteJson(r.dir / "augment.json", r, {{"samples", set.size()}, {"by_type", counts}});
  std::cout << set.size() << " augmented samples\n";
}

void CmdTrain(const Common &c, bool resume, int stop_after) {
  auto r = Prepare(c, "train");
  auto data = LoadData(r);
  auto bank = MakeBank(r);
  auto split = SplitRandom(data.corpus, r.config.protocol.val_fraction, r.config.seed,
                           r.config.protocol.speaker_disjoint_split);
  FitOptions fo;
  fo.checkpoint = r.dir / "train.ckpt";
  fo.resume = resume;
  fo.stop_after_epochs = stop_after;
  fo.config_hash = r.hash;
  auto fit = Fit(split.test, split.val, data.unlabeled ? &*data.unlabeled : nullptr,
                 r.config.ResolvedModel(), r.config.train, r.config.policy, bank, r.config.seed, fo);
  WriteText(r.dir / "history_labeled.csv", Stamp(r) + fit.history.LabeledCsv());
  WriteText(r.dir / "history_unlabeled.csv", Stamp(r) + fit.history.UnlabeledCsv());
  WriteJson(r.dir / "history.json", r, fit.history.ToJson());
  if (fit.interrupted) {
    std::cout << "stopped after " << fit.history.epochs.size() << " epochs; resume with --resume\n";
    return;
  }
  SaveModel(*fit.model, r.dir / "model.bin", r.hash);
  std::cout << "best epoch " << fit.history.best_epoch << " val " << fit.history.best_val_uar << "\n";
}

void CmdLoso(const Common &c) {
  auto r = Prepare(c, "eval-loso");
  auto data = LoadData(r);
  auto bank = MakeBank(r);
  WriteReport(r, LosoEvaluate(data.corpus, data.unlabeled ? &*data.unlabeled : nullptr, r.config, bank,
                              Options(c)));
}

void CmdCross(const Common &c, bool reverse) {
  auto r = Prepare(c, "eval-cross");
  auto data = LoadData(r);
  auto target = MaterializeCorpus(r.config.target, r.cache);
  auto bank = MakeBank(r);
  const Corpus &src = reverse ? target : data.corpus;
  const Corpus &dst = reverse ? data.corpus : target;
  const std::string dir = src.name() + "->" + dst.name();
  WriteReport(r, CrossCorpusEvaluate(src, dst, data.unlabeled ? &*data.unlabeled : nullptr, r.config,
                                     bank, dir, Options(c)));
}

void CmdNoise(const Common &c) {
  auto r = Prepare(c, "eval-noise");
  auto data = LoadData(r);
  auto bank = MakeBank(r);
  WriteReport(r, NoiseProtocol(data.corpus, data.unlabeled ? &*data.unlabeled : nullptr, r.config, bank,
                               Options(c)));
}

void CmdAttack(const Common &c) {
  auto r = Prepare(c, "eval-attack");
  auto data = LoadData(r);
  auto bank = MakeBank(r);
  WriteReport(r, AttackProtocol(data.corpus, data.unlabeled ? &*data.unlabeled : nullptr, r.config, bank,
                                Options(c)));
}

void CmdStudyAug(const Common &c) {
  auto r = Prepare(c, "study-aug");
  auto data = LoadData(r);
  auto bank = MakeBank(r);
  WriteReport(r, StudyAugmentation(data.corpus, data.unlabeled ? &*data.unlabeled : nullptr, r.config,
                                   bank, Options(c)));
}

void CmdStudyFraction(const Common &c) {
  auto r = Prepare(c, "study-fraction");
  auto data = LoadData(r);
  auto bank = MakeBank(r);
  auto rep = StudyLabelFraction(data.corpus, data.unlabeled ? &*data.unlabeled : nullptr, r.config, bank,
                                Options(c));
  WriteReport(r, rep);
  WriteText(r.dir / "curve.csv", Stamp(r) + FractionCurve(rep));
}

void CmdStudyAblation(const Common &c) {
  auto r = Prepare(c, "study-ablation");
  auto data = LoadData(r);
  auto target = MaterializeCorpus(r.config.target, r.cache);
  auto bank = MakeBank(r);
  auto rep = StudyAblation(data.corpus, target, data.unlabeled ? &*data.unlabeled : nullptr, r.config,
                           bank, Options(c));
  WriteReport(r, rep);
  WriteText(r.dir / "table.csv", Stamp(r) + AblationTable(rep));
}

void CmdReport(const Common &c) {
  auto r = Prepare(c, "report");
  const auto root = r.dir.parent_path();
  std::ostringstream md, all;
  md << "# " << r.config.name << " (" << r.hash << ", seed " << r.config.seed << ")\n";
  all << "protocol,arm,mean,std\n";
  int found = 0;
  for (const char *cmd : {"eval-loso", "eval-cross", "eval-noise", "eval-attack", "study-aug",
                          "study-fraction", "study-ablation"}) {
    const auto path = root / cmd / "report.json";
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    auto rep = ExperimentReport::FromJson(json::parse(in));
    ++found;
    md << "\n## " << cmd << "\n\n| arm | UAR % | std |\n|---|---|---|\n";
    for (const auto &a : rep.arms) {
      char line[160];
      std::snprintf(line, sizeof(line), "| %s | %.1f | %.1f |\n", a.name.c_str(), 100.0 * a.mean,
                    100.0 * a.std);
      md << line;
    }
    auto summary = ArmSummary(rep);
    all << summary.substr(summary.find('\n') + 1);
    if (std::string(cmd) == "study-ablation") {
      const auto table = AblationTable(rep);
      WriteText(r.dir / "ablation.csv", Stamp(r) + table);
      md << "\n```\n" << table << "```\n";
    }
    if (std::string(cmd) == "study-fraction") WriteText(r.dir / "fraction.csv", Stamp(r) + FractionCurve(rep));
  }
  if (found == 0) throw UsageError("no reports under " + root.string());
  WriteText(r.dir / "summary.csv", Stamp(r) + all.str());
  WriteText(r.dir / "summary.md", md.str());
  std::cout << md.str();
}

void AddCommon(CLI::App *app, Common &c) {
  app->add_option("--config", c.config_path, "Experiment config (JSON)");
  app->add_option("--out", c.out, "Output root")->capture_default_str();
  app->add_option("--seed", c.seed, "Override the config seed");
  app->add_option("--jobs", c.jobs, "Parallel training tasks")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--set", c.sets, "Config override key.path=value (repeatable)");
  app->add_option("--log-level", c.log_level, "debug|info|warn|error|off")->capture_default_str();
}

int Main(int argc, char **argv) {
  CLI::App app{"mtlaug: multitask speech emotion recognition with augmentation-type auxiliary tasks"};
  app.require_subcommand(1);
  Common c;
  bool resume = false, reverse = false;
  int stop_after = 0;
  std::map<std::string, std::function<void()>> handlers;
  auto add = [&](const std::string &name, const std::string &help, std::function<void()> fn) {
    auto *sub = app.add_subcommand(name, help);
    AddCommon(sub, c);
    handlers[name] = std::move(fn);
    return sub;
  };
  add("synth", "Render the synthetic corpora", [&] { CmdSynth(c); });
  add("features", "Extract log-Mel features", [&] { CmdFeatures(c); });
  add("augment", "Materialise the augmented training set", [&] { CmdAugment(c); });
  auto *train = add("train", "Train one model on a random split", [&] { CmdTrain(c, resume, stop_after); });
  train->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");
  train->add_option("--stop-after", stop_after, "Stop after this many epochs (0: run to completion)");
  add("eval-loso", "Leave-one-speaker-out evaluation", [&] { CmdLoso(c); });
  auto *cross = add("eval-cross", "Cross-corpus evaluation", [&] { CmdCross(c, reverse); });
  cross->add_flag("--reverse", reverse, "Train on the target corpus, test on the source");
  add("eval-noise", "Noisy-speech evaluation", [&] { CmdNoise(c); });
  add("eval-attack", "FGSM/BIM adversarial evaluation", [&] { CmdAttack(c); });
  add("study-aug", "Single-augmentation study", [&] { CmdStudyAug(c); });
  add("study-fraction", "Labeled-fraction study", [&] { CmdStudyFraction(c); });
  add("study-ablation", "Five-row ablation study", [&] { CmdStudyAblation(c); });
  add("report", "Merge reports of one config into summaries", [&] { CmdReport(c); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }
  auto error = [](const char *kind, const std::string &msg, const std::string &field) {
    json j{{"error", kind}, {"message", msg}};
    if (!field.empty()) j["field"] = field;
    std::cerr << j.dump() << "\n";
  };
  try {
    for (auto *sub : app.get_subcommands()) handlers.at(sub->get_name())();
  } catch (const ConfigError &e) {
    error("config", e.what(), e.field());
    return 2;
  } catch (const MissingCorpusError &e) {
    error("missing_corpus", e.what(), "");
    return 3;
  } catch (const std::exception &e) {
    error("runtime", e.what(), "");
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace mtlaug

int main(int argc, char **argv) { return mtlaug::Main(argc, argv); }
