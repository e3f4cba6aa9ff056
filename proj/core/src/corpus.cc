// core/src/corpus.cc

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

#include "mtlaug/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "mtlaug/error.h"
#include "mtlaug/rng.h"

namespace mtlaug {

namespace {

constexpr std::string_view kHeader = "id,audio_path,speaker_id,emotion,corpus_tag";

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> SplitCsv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(Trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line_no);
  out.push_back(Trim(cur));
  return out;
}

std::string QuoteCsv(const std::string &field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string q = "\"";
  for (char c : field) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

}  // namespace

std::string_view EmotionName(Emotion e) {
  switch (e) {
    case Emotion::kAngry: return "angry";
    case Emotion::kHappy: return "happy";
    case Emotion::kNeutral: return "neutral";
    case Emotion::kSad: return "sad";
    case Emotion::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Emotion ParseEmotion(std::string_view token) {
  if (token == "angry") return Emotion::kAngry;
  if (token == "happy") return Emotion::kHappy;
  if (token == "neutral") return Emotion::kNeutral;
  if (token == "sad") return Emotion::kSad;
  if (token == "unlabeled") return Emotion::kUnlabeled;
  throw ValidationError("emotion '" + std::string(token) +
                        "' is not one of angry,happy,neutral,sad,unlabeled");
}

Corpus::Corpus(std::string name, std::vector<Utterance> utterances)
    : name_(std::move(name)), utterances_(std::move(utterances)) {
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> seen_speakers;
  for (const auto &u : utterances_) {
    if (!ids.insert(u.id).second)
      throw ValidationError("duplicate utterance id '" + u.id + "'");
    if (seen_speakers.insert(u.speaker_id).second) speakers_.push_back(u.speaker_id);
  }
}

std::size_t Corpus::CountLabeled() const {
  return static_cast<std::size_t>(std::count_if(
      utterances_.begin(), utterances_.end(),
      [](const Utterance &u) { return IsLabeled(u.emotion); }));
}

Corpus Corpus::FilterSpeakers(const std::set<std::string> &speakers) const {
  std::vector<Utterance> kept;
  for (const auto &u : utterances_)
    if (speakers.count(u.speaker_id)) kept.push_back(u);
  return Corpus(name_, std::move(kept));
}

Corpus Corpus::Subset(const std::vector<std::size_t> &indices) const {
  std::vector<Utterance> kept;
  kept.reserve(indices.size());
  for (std::size_t i : indices) kept.push_back(utterances_.at(i));
  return Corpus(name_, std::move(kept));
}

Corpus Corpus::AsUnlabeled() const {
  std::vector<Utterance> copy = utterances_;
  for (auto &u : copy) u.emotion = Emotion::kUnlabeled;
  return Corpus(name_, std::move(copy));
}

Corpus LoadManifest(const std::filesystem::path &path,
                    const ManifestOptions &options) {
  std::ifstream in(path);
  if (!in) throw MissingCorpusError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<Utterance> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (trimmed != kHeader)
        throw ParseError("expected header '" + std::string(kHeader) + "'", line_no);
      continue;
    }
    auto fields = SplitCsv(trimmed, line_no);
    if (fields.size() != 5)
      throw ParseError("expected 5 fields, got " + std::to_string(fields.size()),
                       line_no);
    if (fields[0].empty()) throw ParseError("empty id", line_no);
    if (fields[2].empty()) throw ParseError("empty speaker_id", line_no);
    Utterance u;
    u.id = fields[0];
    std::filesystem::path audio(fields[1]);
    u.audio_path = audio.is_absolute() ? audio : base / audio;
    u.speaker_id = fields[2];
    std::string emo = fields[3];
    if (options.merge_excited_into_happy && emo == "excited") emo = "happy";
    try {
      u.emotion = ParseEmotion(emo);
    } catch (const ValidationError &e) {
      throw ValidationError(std::string(e.what()) + " (line " +
                            std::to_string(line_no) + ")");
    }
    u.corpus_tag = fields[4];
    rows.push_back(std::move(u));
  }
  return Corpus(path.stem().string(), std::move(rows));
}

void WriteManifest(const Corpus &corpus, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  const auto base = path.parent_path();
  out << kHeader << '\n';
  for (const auto &u : corpus.utterances()) {
    std::filesystem::path audio = u.audio_path;
    if (!base.empty()) {
      auto rel = audio.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") audio = rel;
    }
    out << QuoteCsv(u.id) << ',' << QuoteCsv(audio.generic_string()) << ','
        << QuoteCsv(u.speaker_id) << ',' << EmotionName(u.emotion) << ','
        << QuoteCsv(u.corpus_tag) << '\n';
  }
}

std::vector<Fold> SplitLoso(const Corpus &corpus) {
  const auto &speakers = corpus.speakers();
  if (speakers.size() < 2)
    throw ProtocolError("leave-one-speaker-out needs at least 2 speakers, got " +
                        std::to_string(speakers.size()));
  std::vector<Fold> folds;
  folds.reserve(speakers.size());
  for (const auto &s : speakers) {
    std::vector<Utterance> train, test;
    for (const auto &u : corpus.utterances())
      (u.speaker_id == s ? test : train).push_back(u);
    folds.push_back({s, Corpus(corpus.name(), std::move(train)),
                     Corpus(corpus.name(), std::move(test))});
  }
  return folds;
}

RandomSplit SplitRandom(const Corpus &corpus, double val_fraction,
                        std::uint64_t seed, bool speaker_disjoint) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ValidationError("val_fraction must lie in (0, 1)");
  Rng rng(seed);
  const std::size_t n = corpus.size();
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
  std::vector<bool> in_val(n, false);
  if (!speaker_disjoint) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = true;
  } else {
    std::vector<std::string> speakers = corpus.speakers();
    std::shuffle(speakers.begin(), speakers.end(), rng.engine());
    std::size_t taken = 0;
    for (const auto &s : speakers) {
      if (taken >= n_val) break;
      for (std::size_t i = 0; i < n; ++i) {
        if (corpus[i].speaker_id == s) {
          in_val[i] = true;
          ++taken;
        }
      }
    }
  }
  std::vector<std::size_t> val_idx, test_idx;
  for (std::size_t i = 0; i < n; ++i) (in_val[i] ? val_idx : test_idx).push_back(i);
  return {corpus.Subset(val_idx), corpus.Subset(test_idx)};
}

}  // namespace mtlaug
