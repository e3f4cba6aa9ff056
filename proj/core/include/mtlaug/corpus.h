// core/include/mtlaug/corpus.h

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

#ifndef MTLAUG_CORPUS_H_
#define MTLAUG_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtlaug {

inline constexpr int kNumEmotions = 4;

/// Four-class emotion set, plus a marker for utterances without a label.
/// The numeric order (angry, happy, neutral, sad) fixes the layout of every
/// label vector and confusion matrix.
enum class Emotion : std::uint8_t {
  kAngry = 0,
  kHappy = 1,
  kNeutral = 2,
  kSad = 3,
  kUnlabeled = 4,
};

std::string_view EmotionName(Emotion e);
/// Throws ValidationError for anything outside the five manifest tokens.
Emotion ParseEmotion(std::string_view token);
inline bool IsLabeled(Emotion e) { return e != Emotion::kUnlabeled; }
inline int EmotionIndex(Emotion e) { return static_cast<int>(e); }

struct Utterance {
  std::string id;
  std::filesystem::path audio_path;
  std::string speaker_id;
  Emotion emotion = Emotion::kUnlabeled;
  std::string corpus_tag;

  bool operator==(const Utterance &) const = default;
};

/// Immutable-after-construction collection of utterances. Ids are unique.
class Corpus {
 public:
  Corpus() = default;
  /// Throws ValidationError on duplicate ids.
  Corpus(std::string name, std::vector<Utterance> utterances);

  const std::string &name() const { return name_; }
  const std::vector<Utterance> &utterances() const { return utterances_; }
  std::size_t size() const { return utterances_.size(); }
  bool empty() const { return utterances_.empty(); }
  const Utterance &operator[](std::size_t i) const { return utterances_[i]; }

  /// Speaker ids in first-appearance order.
  const std::vector<std::string> &speakers() const { return speakers_; }
  std::size_t CountLabeled() const;

  /// Sub-corpus keeping utterances whose speaker is in `speakers`, in order.
  Corpus FilterSpeakers(const std::set<std::string> &speakers) const;
  Corpus Subset(const std::vector<std::size_t> &indices) const;
  /// Same utterances with every emotion replaced by `unlabeled`.
  Corpus AsUnlabeled() const;

  bool operator==(const Corpus &other) const {
    return name_ == other.name_ && utterances_ == other.utterances_;
  }

 private:
  std::string name_;
  std::vector<Utterance> utterances_;
  std::vector<std::string> speakers_;
};

struct ManifestOptions {
  /// Maps the token "excited" onto happy instead of rejecting it.
  bool merge_excited_into_happy = false;
};

/// Reads `id,audio_path,speaker_id,emotion,corpus_tag` CSV. Relative audio
/// paths resolve against the manifest's directory. Audio files are not
/// checked here.
Corpus LoadManifest(const std::filesystem::path &path,
                    const ManifestOptions &options = {});
/// Writes audio paths relative to the manifest directory where possible.
void WriteManifest(const Corpus &corpus, const std::filesystem::path &path);

struct Fold {
  std::string test_speaker;
  Corpus train;
  Corpus test;
};

/// One fold per speaker, in speaker order. Throws ProtocolError with fewer
/// than two speakers.
std::vector<Fold> SplitLoso(const Corpus &corpus);

struct RandomSplit {
  Corpus val;
  Corpus test;
};

/// Utterance-level random split; |val| = floor(val_fraction * n). With
/// `speaker_disjoint`, whole speakers are assigned greedily in shuffled order
/// until the validation share reaches the target.
RandomSplit SplitRandom(const Corpus &corpus, double val_fraction,
                        std::uint64_t seed, bool speaker_disjoint = false);

}  // namespace mtlaug

#endif  // MTLAUG_CORPUS_H_
