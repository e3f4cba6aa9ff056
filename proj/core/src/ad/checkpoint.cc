// core/src/ad/checkpoint.cc

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

#include "mtlaug/ad/checkpoint.h"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "mtlaug/error.h"

namespace mtlaug::ad {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'L', 'C', 'K', 'P', 'T', '1'};

void PutU64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t GetU64(const std::string &in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::uint32_t Crc(const std::string &a, const std::string &b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef *>(a.data()), static_cast<uInt>(a.size()));
  crc = crc32(crc, reinterpret_cast<const Bytef *>(b.data()), static_cast<uInt>(b.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void Archive::Put(const std::string &name, Shape shape, std::vector<float> data) {
  if (NumElements(shape) != data.size())
    throw ShapeError("archive: shape " + ShapeString(shape) + " does not match data for " + name);
  arrays_[name] = {std::move(shape), std::move(data)};
}

const ArchiveArray &Archive::Get(const std::string &name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw IntegrityError("checkpoint has no array '" + name + "'");
  return it->second;
}

std::string Archive::Serialize() const {
  nlohmann::json index;
  index["meta"] = meta_;
  index["arrays"] = nlohmann::json::array();
  std::string payload;
  for (const auto &[name, arr] : arrays_) {
    index["arrays"].push_back(
        {{"name", name}, {"shape", arr.shape}, {"offset", payload.size()}, {"count", arr.data.size()}});
    payload.append(reinterpret_cast<const char *>(arr.data.data()), arr.data.size() * sizeof(float));
  }
  const std::string idx = index.dump();
  std::string out(kMagic, sizeof(kMagic));
  PutU64(out, idx.size());
  out += idx;
  PutU64(out, payload.size());
  out += payload;
  const std::uint32_t crc = Crc(idx, payload);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));
  return out;
}

Archive Archive::Deserialize(const std::string &bytes) {
  if (bytes.size() < 8 + 8 + 8 + 4 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw IntegrityError("checkpoint: bad magic or truncated header");
  const std::uint64_t idx_len = GetU64(bytes, 8);
  if (idx_len > bytes.size() - 28) throw IntegrityError("checkpoint: truncated index");
  const std::string idx = bytes.substr(16, idx_len);
  const std::size_t pay_pos = 16 + idx_len + 8;
  const std::uint64_t pay_len = GetU64(bytes, 16 + idx_len);
  if (pay_pos + pay_len + 4 != bytes.size()) throw IntegrityError("checkpoint: truncated payload");
  const std::string payload = bytes.substr(pay_pos, pay_len);
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pay_pos + pay_len + i]))
              << (8 * i);
  if (stored != Crc(idx, payload)) throw IntegrityError("checkpoint: checksum mismatch");

  Archive a;
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(idx);
    a.meta_ = index.at("meta");
    for (const auto &e : index.at("arrays")) {
      const auto offset = e.at("offset").get<std::size_t>();
      const auto count = e.at("count").get<std::size_t>();
      if (offset + count * sizeof(float) > payload.size())
        throw IntegrityError("checkpoint: array out of bounds");
      std::vector<float> data(count);
      std::memcpy(data.data(), payload.data() + offset, count * sizeof(float));
      a.Put(e.at("name").get<std::string>(), e.at("shape").get<Shape>(), std::move(data));
    }
  } catch (const nlohmann::json::exception &ex) {
    throw IntegrityError(std::string("checkpoint: malformed index: ") + ex.what());
  }
  return a;
}

void Archive::Save(const std::filesystem::path &path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write checkpoint " + tmp.string());
    const std::string bytes = Serialize();
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::Load(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IntegrityError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return Deserialize(ss.str());
}

}  // namespace mtlaug::ad
