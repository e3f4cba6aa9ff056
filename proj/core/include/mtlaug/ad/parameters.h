// core/include/mtlaug/ad/parameters.h

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

#ifndef MTLAUG_AD_PARAMETERS_H_
#define MTLAUG_AD_PARAMETERS_H_

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mtlaug/ad/tensor.h"
#include "mtlaug/error.h"

namespace mtlaug::ad {

/// Named, grouped trainable leaves. Groups let the trainer restrict an
/// optimizer step to a subset of the network.
template <typename Real>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    std::string group;
    Tensor<Real> tensor;
  };

  Tensor<Real> Create(const std::string &name, const std::string &group, Shape shape,
                      std::vector<Real> values) {
    if (Find(name) != nullptr) throw UsageError("duplicate parameter " + name);
    auto t = Tensor<Real>::Parameter(std::move(shape), std::move(values));
    entries_.push_back({name, group, t});
    return t;
  }

  const std::vector<Entry> &entries() const { return entries_; }
  std::vector<Entry> &entries() { return entries_; }

  const Entry *Find(const std::string &name) const {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const Entry &e) { return e.name == name; });
    return it == entries_.end() ? nullptr : &*it;
  }

  std::size_t NumElements(const std::set<std::string> &groups = {}) const {
    std::size_t n = 0;
    for (const auto &e : entries_)
      if (groups.empty() || groups.count(e.group)) n += e.tensor.numel();
    return n;
  }

  bool HasGroup(const std::string &group) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Entry &e) { return e.group == group; });
  }

  void ZeroGrad() {
    for (auto &e : entries_) e.tensor.ZeroGrad();
  }

  /// FNV-1a over the raw bytes of every parameter in `groups` (all if empty).
  std::uint64_t Checksum(const std::set<std::string> &groups = {}) const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto &e : entries_) {
      if (!groups.empty() && !groups.count(e.group)) continue;
      const auto *p = reinterpret_cast<const unsigned char *>(e.tensor.data().data());
      for (std::size_t i = 0; i < e.tensor.numel() * sizeof(Real); ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
      }
    }
    return h;
  }

  /// Copies of all values, in entry order.
  std::vector<std::vector<Real>> Snapshot() const {
    std::vector<std::vector<Real>> out;
    out.reserve(entries_.size());
    for (const auto &e : entries_) out.emplace_back(e.tensor.data().begin(), e.tensor.data().end());
    return out;
  }

  void Restore(const std::vector<std::vector<Real>> &snapshot) {
    if (snapshot.size() != entries_.size()) throw UsageError("snapshot does not match store");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto dst = entries_[i].tensor.mutable_data();
      if (snapshot[i].size() != dst.size())
        throw UsageError("snapshot size mismatch for " + entries_[i].name);
      std::copy(snapshot[i].begin(), snapshot[i].end(), dst.begin());
    }
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace mtlaug::ad

#endif  // MTLAUG_AD_PARAMETERS_H_
