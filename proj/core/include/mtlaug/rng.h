// core/include/mtlaug/rng.h

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

#ifndef MTLAUG_RNG_H_
#define MTLAUG_RNG_H_

#include <cstdint>
#include <random>
#include <string>

namespace mtlaug {

/// Seeded random stream. Child streams are derived from the seed, never from
/// the current position, so results do not depend on how many workers drew
/// from siblings.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  /// Independent stream keyed by `stream`.
  Rng Derive(std::uint64_t stream) const;

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t UniformInt(std::int64_t lo, std::int64_t hi);
  /// Uniform real in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi);
  double Normal(double mean = 0.0, double stddev = 1.0);
  /// Beta(a, b) draw via two gamma variates.
  double Beta(double a, double b);
  bool Bernoulli(double p);

  std::mt19937_64 &engine() { return engine_; }

  /// Textual engine state; round-trips through Restore.
  std::string SaveState() const;
  void RestoreState(const std::string &state);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t SplitMix64(std::uint64_t x);

}  // namespace mtlaug

#endif  // MTLAUG_RNG_H_
