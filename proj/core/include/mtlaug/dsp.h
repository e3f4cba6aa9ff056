// core/include/mtlaug/dsp.h

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

// Feature extraction kernels. Every function here is pure: no RNG, no hidden
// state, identical inputs give identical outputs.

#ifndef MTLAUG_DSP_H_
#define MTLAUG_DSP_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mtlaug/waveform.h"

namespace mtlaug {

/// Log-Mel front end settings. Frame k covers samples [k*hop, k*hop + win);
/// there is no centre padding, so the frame count for a fixed-length input
/// is floor((N - win) / hop) + 1.
struct FeatureConfig {
  double win_ms = 40.0;
  double hop_ms = 10.0;
  int n_mels = 128;
  /// Transform size; frames are zero-padded from win to n_fft.
  int n_fft = 1024;
  double fmin = 0.0;
  double fmax = 8000.0;
  double target_dur_s = 7.5;
  double log_floor = 1e-10;
  int sample_rate = kCanonicalSampleRate;

  void Validate() const;
  int WinLength() const;
  int HopLength() const;
  std::size_t TargetLength() const;
  /// Frames produced for a waveform of `n_samples`.
  int FramesFor(std::size_t n_samples) const;
  /// Fixed frame count of every log-Mel output (747 for the defaults).
  int NumFrames() const { return FramesFor(TargetLength()); }
  int NumBins() const { return n_fft / 2 + 1; }

  bool operator==(const FeatureConfig &) const = default;
};

/// Dense row-major double matrix.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RealMatrix() = default;
  RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// n_mels x frames log-Mel features, stored row-major in fp32.
struct LogMelSpectrogram {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<float> data;

  LogMelSpectrogram() = default;
  LogMelSpectrogram(int mels, int frames)
      : n_mels(mels), n_frames(frames),
        data(static_cast<std::size_t>(mels) * frames, 0.0f) {}

  float &at(int m, int t) { return data[static_cast<std::size_t>(m) * n_frames + t]; }
  float at(int m, int t) const { return data[static_cast<std::size_t>(m) * n_frames + t]; }
  bool SameShape(const LogMelSpectrogram &o) const {
    return n_mels == o.n_mels && n_frames == o.n_frames;
  }
  bool operator==(const LogMelSpectrogram &) const = default;
};

double HzToMel(double hz);
double MelToHz(double mel);

/// Keeps the first round(target_dur_s * rate) samples, zero-padding the tail.
Waveform PadOrTruncate(const Waveform &wave, double target_dur_s);

/// Hamming-windowed magnitude spectrum, (n_fft/2 + 1) x frames.
RealMatrix StftMagnitude(const Waveform &wave, const FeatureConfig &config);

/// Triangular HTK-mel filters, n_mels x (n_fft/2 + 1). Filters too narrow to
/// cover any FFT bin fall back to unit weight on the nearest bin.
RealMatrix MelFilterbank(const FeatureConfig &config, int sample_rate);
/// Centre frequencies (Hz) of the filters above.
std::vector<double> MelCenterFrequencies(const FeatureConfig &config);

/// pad/truncate -> power STFT -> mel projection -> log(x + log_floor).
LogMelSpectrogram LogMel(const Waveform &wave, const FeatureConfig &config);

/// Band-limited time warp x(factor * t): factor > 1 shortens (speeds up)
/// the signal. Output length is round(N / factor); the rate is unchanged.
Waveform Resample(const Waveform &wave, double factor);
/// Sample-rate conversion built on the same interpolator.
Waveform ResampleTo(const Waveform &wave, int target_rate);

double Rms(std::span<const double> x);

struct MixResult {
  Waveform mixed;
  /// g * noise before any peak rescaling.
  Waveform scaled_noise;
  double gain = 0.0;
  /// Factor applied to the mix to bring its peak inside [-1, 1]; 1 if unused.
  double peak_scale = 1.0;
  bool rescaled = false;
};

/// clean + g * noise with g = rms(clean) / (rms(noise) * 10^(snr/20)).
/// Noise is looped or truncated to the clean length. If the mix peaks above
/// 1 the whole mix is scaled down, which preserves the SNR.
MixResult MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db);

/// Little-endian 'LMSP' blob: magic, u32 n_mels, u32 frames, fp32 data,
/// optionally followed by one augmentation-type byte.
void WriteFeatureBlob(const LogMelSpectrogram &spec, const std::filesystem::path &path,
                      std::optional<std::uint8_t> aug_type = std::nullopt);
LogMelSpectrogram ReadFeatureBlob(const std::filesystem::path &path,
                                  std::optional<std::uint8_t> *aug_type = nullptr);
/// JSON sidecar describing the config that produced a blob.
void WriteFeatureSidecar(const FeatureConfig &config, const std::filesystem::path &path);
FeatureConfig ReadFeatureSidecar(const std::filesystem::path &path);

}  // namespace mtlaug

#endif  // MTLAUG_DSP_H_
