// core/src/dsp.cc

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

#include "mtlaug/dsp.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>

#include "json.hpp"
#include "mtlaug/error.h"

namespace mtlaug {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex &FftwPlannerMutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = static_cast<double *>(fftw_malloc(sizeof(double) * n));
    out_ = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(FftwPlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  double *input() { return in_; }
  const fftw_complex *output() const { return out_; }
  void Execute() { fftw_execute(plan_); }

 private:
  int n_;
  double *in_;
  fftw_complex *out_;
  fftw_plan plan_;
};

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  if (x == std::round(x)) return 0.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Zero crossings of the interpolation kernel on each side.
constexpr double kResampleZeros = 32.0;

void PutU32(std::ofstream &out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

}  // namespace

void FeatureConfig::Validate() const {
  if (!(win_ms > 0) || !(hop_ms > 0)) throw ValidationError("win_ms and hop_ms must be positive");
  if (hop_ms > win_ms) throw ValidationError("hop must not exceed window");
  if (n_mels < 1) throw ValidationError("n_mels must be >= 1");
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  if (!(fmin >= 0) || !(fmin < fmax) || fmax > sample_rate / 2.0)
    throw ValidationError("need 0 <= fmin < fmax <= sample_rate/2");
  if (!(target_dur_s > 0)) throw ValidationError("target_dur_s must be positive");
  if (!(log_floor > 0)) throw ValidationError("log_floor must be positive");
  if (n_fft < WinLength()) throw ValidationError("n_fft must be >= window length");
  if (FramesFor(TargetLength()) < 1)
    throw ValidationError("target duration shorter than one window");
}

int FeatureConfig::WinLength() const {
  return static_cast<int>(std::lround(win_ms * 1e-3 * sample_rate));
}

int FeatureConfig::HopLength() const {
  return static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate));
}

std::size_t FeatureConfig::TargetLength() const {
  return static_cast<std::size_t>(std::llround(target_dur_s * sample_rate));
}

int FeatureConfig::FramesFor(std::size_t n_samples) const {
  const auto win = static_cast<std::size_t>(WinLength());
  if (n_samples < win) return 0;
  return static_cast<int>((n_samples - win) / static_cast<std::size_t>(HopLength())) + 1;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Waveform PadOrTruncate(const Waveform &wave, double target_dur_s) {
  const auto n = static_cast<std::size_t>(std::llround(target_dur_s * wave.sample_rate));
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.assign(n, 0.0);
  std::copy_n(wave.samples.begin(), std::min(n, wave.samples.size()), out.samples.begin());
  return out;
}

RealMatrix StftMagnitude(const Waveform &wave, const FeatureConfig &config) {
  const int win = config.WinLength();
  const int hop = config.HopLength();
  if (wave.samples.size() < static_cast<std::size_t>(win))
    throw ValidationError("waveform shorter than one analysis window");
  const int frames = config.FramesFor(wave.samples.size());
  const int bins = config.NumBins();

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (win - 1));

  RealFft fft(config.n_fft);
  RealMatrix mag(bins, frames);
  for (int k = 0; k < frames; ++k) {
    double *in = fft.input();
    const double *src = wave.samples.data() + static_cast<std::size_t>(k) * hop;
    for (int i = 0; i < win; ++i) in[i] = src[i] * window[i];
    std::fill(in + win, in + config.n_fft, 0.0);
    fft.Execute();
    const fftw_complex *out = fft.output();
    for (int b = 0; b < bins; ++b) mag(b, k) = std::hypot(out[b][0], out[b][1]);
  }
  return mag;
}

std::vector<double> MelCenterFrequencies(const FeatureConfig &config) {
  const double lo = HzToMel(config.fmin);
  const double hi = HzToMel(config.fmax);
  const double step = (hi - lo) / (config.n_mels + 1);
  std::vector<double> centers(config.n_mels);
  for (int m = 0; m < config.n_mels; ++m) centers[m] = MelToHz(lo + step * (m + 1));
  return centers;
}

RealMatrix MelFilterbank(const FeatureConfig &config, int sample_rate) {
  const int bins = config.NumBins();
  const double lo = HzToMel(config.fmin);
  const double hi = HzToMel(config.fmax);
  const double step = (hi - lo) / (config.n_mels + 1);
  const double bin_hz = static_cast<double>(sample_rate) / config.n_fft;
  RealMatrix fb(config.n_mels, bins);
  for (int m = 0; m < config.n_mels; ++m) {
    const double left = MelToHz(lo + step * m);
    const double center = MelToHz(lo + step * (m + 1));
    const double right = MelToHz(lo + step * (m + 2));
    double mass = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double f = b * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) w = (f - left) / (center - left);
      else if (f > center && f < right) w = (right - f) / (right - center);
      fb(m, b) = w;
      mass += w;
    }
    if (mass <= 0.0) {
      const int nearest = std::clamp(static_cast<int>(std::lround(center / bin_hz)), 0, bins - 1);
      fb(m, nearest) = 1.0;
    }
  }
  return fb;
}

LogMelSpectrogram LogMel(const Waveform &wave, const FeatureConfig &config) {
  config.Validate();
  Waveform fixed = PadOrTruncate(wave, config.target_dur_s);
  if (fixed.sample_rate != config.sample_rate)
    throw ValidationError("waveform rate differs from feature config rate");
  RealMatrix mag = StftMagnitude(fixed, config);
  RealMatrix fb = MelFilterbank(config, config.sample_rate);
  const int frames = static_cast<int>(mag.cols);
  LogMelSpectrogram out(config.n_mels, frames);
  std::vector<double> power(mag.rows);
  for (int t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < mag.rows; ++b) {
      const double v = mag(b, t);
      power[b] = v * v;
    }
    for (int m = 0; m < config.n_mels; ++m) {
      double acc = 0.0;
      const double *row = fb.data.data() + static_cast<std::size_t>(m) * fb.cols;
      for (std::size_t b = 0; b < fb.cols; ++b) acc += row[b] * power[b];
      out.at(m, t) = static_cast<float>(std::log(acc + config.log_floor));
    }
  }
  return out;
}

Waveform Resample(const Waveform &wave, double factor) {
  if (!std::isfinite(factor) || !(factor > 0.0))
    throw ValidationError("resample factor must be finite and positive");
  const std::size_t n_in = wave.samples.size();
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) / factor));
  // Cutoff relative to the input Nyquist; lowered when decimating.
  const double cutoff = std::min(1.0, 1.0 / factor);
  const double half_width = kResampleZeros / cutoff;
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.resize(n_out);
  const auto last = static_cast<std::int64_t>(n_in) - 1;
  for (std::size_t n = 0; n < n_out; ++n) {
    const double pos = static_cast<double>(n) * factor;
    const auto k_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(pos - half_width)));
    const auto k_hi = std::min<std::int64_t>(last, static_cast<std::int64_t>(std::floor(pos + half_width)));
    double acc = 0.0;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
      const double d = pos - static_cast<double>(k);
      const double taper = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += wave.samples[static_cast<std::size_t>(k)] * cutoff * Sinc(cutoff * d) * taper;
    }
    out.samples[n] = acc;
  }
  return out;
}

Waveform ResampleTo(const Waveform &wave, int target_rate) {
  if (target_rate <= 0) throw ValidationError("target rate must be positive");
  if (target_rate == wave.sample_rate) return wave;
  Waveform out = Resample(wave, static_cast<double>(wave.sample_rate) / target_rate);
  out.sample_rate = target_rate;
  return out;
}

double Rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

MixResult MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db) {
  const double rms_clean = Rms(clean.samples);
  const double rms_noise_raw = Rms(noise.samples);
  if (!(rms_clean > 0.0)) throw ValidationError("clean signal is silent");
  if (!(rms_noise_raw > 0.0)) throw ValidationError("noise signal is silent");
  if (!std::isfinite(snr_db)) throw ValidationError("snr_db must be finite");

  const std::size_t n = clean.samples.size();
  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i) fitted[i] = noise.samples[i % noise.samples.size()];
  const double rms_noise = Rms(fitted);
  if (!(rms_noise > 0.0)) throw ValidationError("noise excerpt is silent");

  MixResult r;
  r.gain = rms_clean / (rms_noise * std::pow(10.0, snr_db / 20.0));
  r.scaled_noise.sample_rate = clean.sample_rate;
  r.scaled_noise.samples.resize(n);
  r.mixed.sample_rate = clean.sample_rate;
  r.mixed.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.scaled_noise.samples[i] = r.gain * fitted[i];
    r.mixed.samples[i] = clean.samples[i] + r.scaled_noise.samples[i];
    peak = std::max(peak, std::abs(r.mixed.samples[i]));
  }
  if (peak > 1.0) {
    r.peak_scale = 1.0 / peak;
    r.rescaled = true;
    for (double &v : r.mixed.samples) v *= r.peak_scale;
  }
  return r;
}

void WriteFeatureBlob(const LogMelSpectrogram &spec, const std::filesystem::path &path,
                      std::optional<std::uint8_t> aug_type) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write("LMSP", 4);
  PutU32(out, static_cast<std::uint32_t>(spec.n_mels));
  PutU32(out, static_cast<std::uint32_t>(spec.n_frames));
  for (float v : spec.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    PutU32(out, bits);
  }
  if (aug_type) out.put(static_cast<char>(*aug_type));
}

LogMelSpectrogram ReadFeatureBlob(const std::filesystem::path &path,
                                  std::optional<std::uint8_t> *aug_type) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCorpusError("cannot open feature blob " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(bytes[off]) | (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "LMSP", 4) != 0)
    throw FormatError(path.string() + ": bad feature blob magic");
  const std::uint32_t mels = u32(4), frames = u32(8);
  const std::size_t payload = 12 + static_cast<std::size_t>(mels) * frames * 4;
  if (bytes.size() != payload && bytes.size() != payload + 1)
    throw FormatError(path.string() + ": feature blob size mismatch");
  LogMelSpectrogram spec(static_cast<int>(mels), static_cast<int>(frames));
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    std::uint32_t bits = u32(12 + 4 * i);
    std::memcpy(&spec.data[i], &bits, 4);
  }
  if (aug_type) {
    *aug_type = bytes.size() == payload + 1 ? std::optional<std::uint8_t>(bytes.back())
                                            : std::nullopt;
  }
  return spec;
}

void WriteFeatureSidecar(const FeatureConfig &c, const std::filesystem::path &path) {
  nlohmann::ordered_json j = {
      {"win_ms", c.win_ms},   {"hop_ms", c.hop_ms},
      {"n_mels", c.n_mels},   {"n_fft", c.n_fft},
      {"fmin", c.fmin},       {"fmax", c.fmax},
      {"target_dur_s", c.target_dur_s},
      {"log_floor", c.log_floor},
      {"sample_rate", c.sample_rate},
      {"n_frames", c.NumFrames()},
  };
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

FeatureConfig ReadFeatureSidecar(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw MissingCorpusError("cannot open " + path.string());
  auto j = nlohmann::json::parse(in);
  FeatureConfig c;
  c.win_ms = j.at("win_ms");
  c.hop_ms = j.at("hop_ms");
  c.n_mels = j.at("n_mels");
  c.n_fft = j.at("n_fft");
  c.fmin = j.at("fmin");
  c.fmax = j.at("fmax");
  c.target_dur_s = j.at("target_dur_s");
  c.log_floor = j.at("log_floor");
  c.sample_rate = j.at("sample_rate");
  return c;
}

}  // namespace mtlaug
