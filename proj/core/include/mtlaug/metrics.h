// core/include/mtlaug/metrics.h

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

#ifndef MTLAUG_METRICS_H_
#define MTLAUG_METRICS_H_

#include <cstdint>
#include <vector>

namespace mtlaug {

/// k x k counts; rows are true classes, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k = 4);
  static ConfusionMatrix FromRows(const std::vector<std::vector<std::int64_t>> &rows);

  int k() const { return k_; }
  void Add(int truth, int predicted, std::int64_t count = 1);
  void Merge(const ConfusionMatrix &other);
  std::int64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth * k_ + predicted)];
  }
  std::int64_t RowTotal(int truth) const;
  std::int64_t total() const;
  std::vector<std::vector<std::int64_t>> Rows() const;
  bool operator==(const ConfusionMatrix &) const = default;

 private:
  int k_;
  std::vector<std::int64_t> counts_;
};

/// Mean per-class recall over classes that occur. Classes with no samples
/// are skipped (with a logged warning). Throws ValidationError if the
/// matrix is empty.
double Uar(const ConfusionMatrix &cm);
/// Overall accuracy.
double WeightedAccuracy(const ConfusionMatrix &cm);

/// Sample standard deviation (n - 1); 0 for fewer than two values.
double SampleStd(const std::vector<double> &v);
double Mean(const std::vector<double> &v);

}  // namespace mtlaug

#endif  // MTLAUG_METRICS_H_
