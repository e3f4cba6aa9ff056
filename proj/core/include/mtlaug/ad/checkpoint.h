// core/include/mtlaug/ad/checkpoint.h

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

// Flat binary container for named fp32 arrays plus a JSON metadata block.
//
// Layout (little-endian):
//   "MTLCKPT1"  u64 index_bytes  index JSON  u64 payload_bytes  payload
//   u32 crc32(index JSON + payload)
// The index lists every array as {name, shape, offset, count}.

#ifndef MTLAUG_AD_CHECKPOINT_H_
#define MTLAUG_AD_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtlaug/ad/tensor.h"

namespace mtlaug::ad {

struct ArchiveArray {
  Shape shape;
  std::vector<float> data;
};

class Archive {
 public:
  nlohmann::json &meta() { return meta_; }
  const nlohmann::json &meta() const { return meta_; }

  void Put(const std::string &name, Shape shape, std::vector<float> data);
  bool Has(const std::string &name) const { return arrays_.count(name) > 0; }
  /// Throws IntegrityError if absent.
  const ArchiveArray &Get(const std::string &name) const;
  const std::map<std::string, ArchiveArray> &arrays() const { return arrays_; }

  std::string Serialize() const;
  /// Throws IntegrityError on bad magic, truncation or checksum mismatch.
  static Archive Deserialize(const std::string &bytes);

  /// Writes to a temporary file then renames, so readers never see a
  /// partial checkpoint.
  void Save(const std::filesystem::path &path) const;
  static Archive Load(const std::filesystem::path &path);

 private:
  nlohmann::json meta_ = nlohmann::json::object();
  std::map<std::string, ArchiveArray> arrays_;
};

}  // namespace mtlaug::ad

#endif  // MTLAUG_AD_CHECKPOINT_H_
