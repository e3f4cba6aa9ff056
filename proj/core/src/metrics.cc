// core/src/metrics.cc

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

#include "mtlaug/metrics.h"

#include <cmath>
#include <numeric>

#include "mtlaug/error.h"
#include "mtlaug/log.h"

namespace mtlaug {

ConfusionMatrix::ConfusionMatrix(int k) : k_(k) {
  if (k < 1) throw ValidationError("confusion matrix needs k >= 1");
  counts_.assign(static_cast<std::size_t>(k * k), 0);
}

ConfusionMatrix ConfusionMatrix::FromRows(const std::vector<std::vector<std::int64_t>> &rows) {
  ConfusionMatrix cm(static_cast<int>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size()) throw ValidationError("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p)
      cm.Add(static_cast<int>(t), static_cast<int>(p), rows[t][p]);
  }
  return cm;
}

void ConfusionMatrix::Add(int truth, int predicted, std::int64_t count) {
  if (truth < 0 || truth >= k_ || predicted < 0 || predicted >= k_)
    throw ValidationError("confusion matrix: class index out of range");
  if (count < 0) throw ValidationError("confusion matrix: negative count");
  counts_[static_cast<std::size_t>(truth * k_ + predicted)] += count;
}

void ConfusionMatrix::Merge(const ConfusionMatrix &other) {
  if (other.k_ != k_) throw ValidationError("confusion matrix: size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::int64_t ConfusionMatrix::RowTotal(int truth) const {
  std::int64_t s = 0;
  for (int p = 0; p < k_; ++p) s += at(truth, p);
  return s;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::vector<std::vector<std::int64_t>> ConfusionMatrix::Rows() const {
  std::vector<std::vector<std::int64_t>> r(static_cast<std::size_t>(k_));
  for (int t = 0; t < k_; ++t)
    for (int p = 0; p < k_; ++p) r[static_cast<std::size_t>(t)].push_back(at(t, p));
  return r;
}

double Uar(const ConfusionMatrix &cm) {
  double sum = 0.0;
  int present = 0;
  for (int t = 0; t < cm.k(); ++t) {
    const auto n = cm.RowTotal(t);
    if (n == 0) continue;
    sum += static_cast<double>(cm.at(t, t)) / static_cast<double>(n);
    ++present;
  }
  if (present == 0) throw ValidationError("UAR of an empty confusion matrix");
  if (present < cm.k())
    LogWarn("uar_absent_classes", {{"present", present}, {"k", cm.k()}});
  return sum / present;
}

double WeightedAccuracy(const ConfusionMatrix &cm) {
  const auto n = cm.total();
  if (n == 0) throw ValidationError("accuracy of an empty confusion matrix");
  std::int64_t diag = 0;
  for (int t = 0; t < cm.k(); ++t) diag += cm.at(t, t);
  return static_cast<double>(diag) / static_cast<double>(n);
}

double Mean(const std::vector<double> &v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double SampleStd(const std::vector<double> &v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace mtlaug
