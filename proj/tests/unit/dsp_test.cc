// tests/unit/dsp_test.cc

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mtlaug/dsp.h"
#include "mtlaug/error.h"
#include "test_support.h"

namespace mtlaug {
namespace {

Waveform Tone(double hz, std::size_t n, int rate = 16000, double amp = 0.5) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2 * std::numbers::pi * hz * i / rate);
  return w;
}

double AutocorrPitch(const Waveform &w, double lo_hz, double hi_hz) {
  const auto &x = w.samples;
  const int lo = static_cast<int>(w.sample_rate / hi_hz), hi = static_cast<int>(w.sample_rate / lo_hz);
  double best_r = -1e300, best = lo;
  for (int lag = lo; lag <= hi; ++lag) {
    double r = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i) r += x[i] * x[i + lag];
    r /= static_cast<double>(x.size() - lag);
    if (r > best_r) {
      best_r = r;
      best = lag;
    }
  }
  return w.sample_rate / best;
}

TEST(FeatureConfigTest, DefaultFrameCount) {
  FeatureConfig c;
  EXPECT_EQ(c.WinLength(), 640);
  EXPECT_EQ(c.HopLength(), 160);
  EXPECT_EQ(c.TargetLength(), 120000u);
  EXPECT_EQ(c.NumFrames(), 747);
}

TEST(PadOrTruncateTest, Cases) {
  auto nine = PadOrTruncate(Tone(200, 144000), 7.5);
  ASSERT_EQ(nine.size(), 120000u);
  auto src = Tone(200, 144000);
  EXPECT_TRUE(std::equal(nine.samples.begin(), nine.samples.end(), src.samples.begin()));
  auto exact = Tone(200, 120000);
  EXPECT_EQ(PadOrTruncate(exact, 7.5).samples, exact.samples);
  auto one = PadOrTruncate(Tone(200, 16000), 7.5);
  ASSERT_EQ(one.size(), 120000u);
  EXPECT_TRUE(std::all_of(one.samples.begin() + 16000, one.samples.end(), [](double v) { return v == 0.0; }));
}

TEST(StftTest, ZeroInputZeroMagnitude) {
  FeatureConfig c;
  Waveform z;
  z.samples.assign(4000, 0.0);
  auto m = StftMagnitude(z, c);
  EXPECT_EQ(m.rows, 513u);
  for (double v : m.data) EXPECT_EQ(v, 0.0);
}

TEST(StftTest, ToneArgmaxBin) {
  FeatureConfig c;
  auto m = StftMagnitude(Tone(1000, 8000), c);
  const std::size_t expect = static_cast<std::size_t>(std::lround(1000.0 * c.n_fft / 16000));
  for (std::size_t t = 0; t < m.cols; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.rows; ++k)
      if (m(k, t) > m(best, t)) best = k;
    EXPECT_LE(std::abs(static_cast<long>(best) - static_cast<long>(expect)), 1) << t;
  }
}

TEST(StftTest, TooShortThrows) {
  FeatureConfig c;
  EXPECT_THROW(StftMagnitude(Tone(100, 100), c), ValidationError);
}

TEST(MelTest, FilterbankRowsAndCenters) {
  FeatureConfig c;
  auto fb = MelFilterbank(c, 16000);
  ASSERT_EQ(fb.rows, 128u);
  for (std::size_t r = 0; r < fb.rows; ++r) {
    double s = 0;
    for (std::size_t k = 0; k < fb.cols; ++k) {
      EXPECT_GE(fb(r, k), 0.0);
      s += fb(r, k);
    }
    EXPECT_GT(s, 0.0) << r;
  }
  auto centers = MelCenterFrequencies(c);
  for (std::size_t i = 1; i < centers.size(); ++i) EXPECT_GT(centers[i], centers[i - 1]);
}

TEST(MelTest, TwoFilterCentersHandEvaluated) {
  FeatureConfig c;
  c.n_mels = 2;
  auto centers = MelCenterFrequencies(c);
  ASSERT_EQ(centers.size(), 2u);
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  for (int i = 0; i < 2; ++i) {
    const double mel = top * (i + 1) / 3.0;
    const double hz = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    EXPECT_NEAR(centers[i], hz, 1e-9);
  }
  EXPECT_NEAR(MelToHz(HzToMel(1234.5)), 1234.5, 1e-9);
}

TEST(LogMelTest, ZeroWaveformIsLogFloor) {
  FeatureConfig c;
  c.target_dur_s = 0.5;
  Waveform z;
  z.samples.assign(8000, 0.0);
  auto s = LogMel(z, c);
  EXPECT_EQ(s.n_mels, 128);
  EXPECT_EQ(s.n_frames, c.NumFrames());
  for (float v : s.data) EXPECT_FLOAT_EQ(v, static_cast<float>(std::log(c.log_floor)));
}

TEST(LogMelTest, DeterministicAndFixedShape) {
  FeatureConfig c;
  c.target_dur_s = 0.5;
  auto a = LogMel(Tone(440, 3000), c);
  auto b = LogMel(Tone(440, 3000), c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(LogMel(Tone(440, 30000), c).n_frames, a.n_frames);
}

TEST(LogMelTest, ToneAtCenterPeaksAtThatFilter) {
  FeatureConfig c;
  c.target_dur_s = 0.5;
  auto centers = MelCenterFrequencies(c);
  for (int m : {40, 70, 100}) {
    auto s = LogMel(Tone(centers[m], 8000), c);
    const int t = s.n_frames / 2;
    int best = 0;
    for (int r = 1; r < s.n_mels; ++r)
      if (s.at(r, t) > s.at(best, t)) best = r;
    EXPECT_EQ(best, m);
  }
}

TEST(ResampleTest, IdentityFactor) {
  auto w = Tone(300, 4000);
  auto r = Resample(w, 1.0);
  ASSERT_EQ(r.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1e-6);
}

TEST(ResampleTest, LengthForSpeedUp) {
  Waveform w;
  w.samples.assign(120000, 0.1);
  EXPECT_NEAR(static_cast<double>(Resample(w, 1.1).size()), 109091.0, 1.0);
  EXPECT_NEAR(static_cast<double>(Resample(w, 0.9).size()), 133333.0, 1.0);
  EXPECT_THROW(Resample(w, std::nan("")), ValidationError);
}

TEST(ResampleTest, SlowDownLowersPitch) {
  auto r = Resample(Tone(440, 16000), 0.9);
  EXPECT_NEAR(AutocorrPitch(r, 300, 600), 396.0, 396.0 * 0.02);
}

TEST(ResampleTest, UpsampleMatchesSincOracle) {
  const std::size_t n = 100;
  auto w = Tone(300, n, 8000);
  auto up = ResampleTo(w, 16000);
  EXPECT_NEAR(static_cast<double>(up.size()), 2.0 * n, 1.0);
  // Ideal band-limited interpolation of the finite sequence.
  for (std::size_t j = 60; j < 140; ++j) {
    const double pos = j / 2.0;
    double ref = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = pos - k;
      ref += w.samples[k] * (d == 0.0 ? 1.0 : std::sin(std::numbers::pi * d) / (std::numbers::pi * d));
    }
    EXPECT_NEAR(up.samples[j], ref, 0.02) << j;
  }
}

TEST(MixTest, GainDefinition) {
  auto clean = Tone(200, 8000, 16000, 0.3);
  Rng rng(4);
  Waveform noise;
  noise.samples = testing::RandomVector(3000, rng, 0.1);
  for (double snr : {0.0, 20.0}) {
    auto m = MixAtSnr(clean, noise, snr);
    EXPECT_NEAR(Rms(m.scaled_noise.samples), Rms(clean.samples) / std::pow(10.0, snr / 20.0), 1e-12);
    EXPECT_NEAR(20 * std::log10(Rms(clean.samples) / Rms(m.scaled_noise.samples)), snr, 1e-6);
  }
}

TEST(MixTest, PeakRescaleKeepsRatio) {
  auto clean = Tone(200, 8000, 16000, 0.95);
  Rng rng(5);
  Waveform noise;
  noise.samples = testing::RandomVector(8000, rng, 0.5);
  auto m = MixAtSnr(clean, noise, 0.0);
  ASSERT_TRUE(m.rescaled);
  double peak = 0;
  for (double v : m.mixed.samples) peak = std::max(peak, std::abs(v));
  EXPECT_LE(peak, 1.0 + 1e-12);
  for (std::size_t i = 0; i < 50; ++i)
    EXPECT_NEAR(m.mixed.samples[i], m.peak_scale * (clean.samples[i] + m.scaled_noise.samples[i]), 1e-12);
}

TEST(MixTest, SilentInputsThrow) {
  Waveform z;
  z.samples.assign(100, 0.0);
  auto t = Tone(100, 100);
  EXPECT_THROW(MixAtSnr(z, t, 0), ValidationError);
  EXPECT_THROW(MixAtSnr(t, z, 0), ValidationError);
}

TEST(FeatureBlobTest, RoundTrip) {
  testing::TempDir dir("blob");
  LogMelSpectrogram s(3, 5);
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = static_cast<float>(i) * 0.25f - 1.0f;
  WriteFeatureBlob(s, dir.path() / "a.lmsp", std::uint8_t{2});
  std::optional<std::uint8_t> tag;
  EXPECT_EQ(ReadFeatureBlob(dir.path() / "a.lmsp", &tag), s);
  EXPECT_EQ(tag, std::uint8_t{2});
  FeatureConfig c;
  c.n_mels = 40;
  WriteFeatureSidecar(c, dir.path() / "a.json");
  EXPECT_EQ(ReadFeatureSidecar(dir.path() / "a.json"), c);
}

}  // namespace
}  // namespace mtlaug
