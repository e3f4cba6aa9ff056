// core/src/wav.cc

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mtlaug/dsp.h"
#include "mtlaug/error.h"
#include "mtlaug/waveform.h"

namespace mtlaug {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t ReadU32(const std::uint8_t *p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t ReadU16(const std::uint8_t *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void PutU16(std::vector<std::uint8_t> &out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

double DecodeSample(const std::uint8_t *p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatFloat) {
    float f;
    std::uint32_t u = ReadU32(p);
    std::memcpy(&f, &u, sizeof f);
    return f;
  }
  switch (bits) {
    case 8: return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: return static_cast<std::int16_t>(ReadU16(p)) / 32768.0;
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xFFFFFF;
      return v / 8388608.0;
    }
    case 32: return static_cast<std::int32_t>(ReadU32(p)) / 2147483648.0;
    default: break;
  }
  throw FormatError("unsupported PCM bit depth " + std::to_string(bits));
}

}  // namespace

void Waveform::Validate() const {
  if (samples.empty()) throw ValidationError("waveform is empty");
  if (sample_rate <= 0) throw ValidationError("waveform sample rate must be positive");
  for (double s : samples)
    if (!std::isfinite(s)) throw ValidationError("waveform contains non-finite samples");
}

Waveform ReadWavNative(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCorpusError("cannot open audio file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError(path.string() + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t *data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t *chunk = bytes.data() + pos;
    std::uint32_t size = ReadU32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw FormatError(path.string() + ": truncated fmt chunk");
      format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = ReadU32(chunk + 12);
      bits = ReadU16(chunk + 22);
      if (format == kFormatExtensible && avail >= 26) format = ReadU16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (format == 0) throw FormatError(path.string() + ": missing fmt chunk");
  if (format != kFormatPcm && !(format == kFormatFloat && bits == 32))
    throw FormatError(path.string() + ": unsupported codec (format tag " +
                      std::to_string(format) + ")");
  if (channels == 0 || rate == 0) throw FormatError(path.string() + ": bad fmt fields");
  if (bits % 8 != 0 || bits == 0) throw FormatError(path.string() + ": bad bit depth");
  if (data == nullptr) throw FormatError(path.string() + ": missing data chunk");

  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw ValidationError(path.string() + ": zero-length audio payload");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c)
      acc += DecodeSample(data + i * frame_bytes + c * (bits / 8), format, bits);
    w.samples[i] = acc / channels;
  }
  return w;
}

Waveform ReadWav(const std::filesystem::path &path) {
  Waveform w = ReadWavNative(path);
  if (w.sample_rate != kCanonicalSampleRate) w = ResampleTo(w, kCanonicalSampleRate);
  return w;
}

void WriteWav(const Waveform &wave, const std::filesystem::path &path) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(out, 16);
  PutU16(out, kFormatPcm);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(out, 2 * n);
  for (double s : wave.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<std::int16_t>(std::lround(c * 32767.0));
    PutU16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(reinterpret_cast<const char *>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace mtlaug
