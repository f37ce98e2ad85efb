// Copyright 2026 The ComFeAT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "comfeat/spectral.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "comfeat/error.hpp"
#include "support/oracles.hpp"

namespace comfeat {
namespace {

using testing::naive_power_spectrum;
using testing::sine;

AudioClip test_tones() {
  std::vector<double> x(16000, 0.0);
  for (auto [f, a] : {std::pair{440.0, 0.3}, {1250.0, 0.2}, {3100.0, 0.1}}) {
    const auto s = sine(f, 16000, 16000, a);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
  }
  return {{x}, 16000};
}

TEST(FrameSignal, FrameCount) {
  const SpectralConfig cfg;
  EXPECT_EQ(frame_signal(std::vector<double>(16000, 0.0), cfg).rows(), 98u);
  EXPECT_EQ(frame_signal(std::vector<double>(400, 0.0), cfg).rows(), 1u);
  EXPECT_EQ(frame_signal(std::vector<double>(559, 0.0), cfg).rows(), 1u);
  EXPECT_EQ(frame_signal(std::vector<double>(560, 0.0), cfg).rows(), 2u);
}

TEST(FrameSignal, ConstantSignalYieldsHammingWindow) {
  const auto frames = frame_signal(std::vector<double>(800, 1.0), SpectralConfig{});
  EXPECT_DOUBLE_EQ(frames(0, 0), 0.08);
  EXPECT_DOUBLE_EQ(frames(0, 399), 0.08);
  for (std::size_t t = 1; t < frames.rows(); ++t) {
    for (std::size_t n = 0; n < frames.cols(); ++n) EXPECT_EQ(frames(t, n), frames(0, n));
  }
  // Peak of the symmetric window sits between the two middle samples.
  EXPECT_NEAR(frames(0, 200), 1.0, 1e-4);
}

TEST(FrameSignal, TooShort) {
  try {
    frame_signal(std::vector<double>(399, 0.0), SpectralConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

TEST(SpectralConfig, Validation) {
  auto bad = [](auto mutate) {
    SpectralConfig cfg;
    mutate(cfg);
    try {
      cfg.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::kBadConfig;
    }
    return false;
  };
  EXPECT_TRUE(bad([](SpectralConfig& c) { c.hop = 0; }));
  EXPECT_TRUE(bad([](SpectralConfig& c) { c.hop = 401; }));
  EXPECT_TRUE(bad([](SpectralConfig& c) { c.n_fft = 384; }));
  EXPECT_TRUE(bad([](SpectralConfig& c) { c.n_fft = 256; }));
  EXPECT_TRUE(bad([](SpectralConfig& c) { c.n_coeffs = 41; }));
  EXPECT_TRUE(bad([](SpectralConfig& c) { c.n_coeffs = 0; }));
  EXPECT_TRUE(bad([](SpectralConfig& c) { c.log_floor = 0.0; }));
  EXPECT_NO_THROW(SpectralConfig{}.validate());
}

TEST(PowerSpectrum, DcOnly) {
  const auto p = power_spectrum(std::vector<double>(8, 1.0), 8);
  ASSERT_EQ(p.size(), 5u);
  EXPECT_NEAR(p[0], 64.0, 1e-12);
  for (std::size_t k = 1; k < p.size(); ++k) EXPECT_NEAR(p[k], 0.0, 1e-12);
}

TEST(PowerSpectrum, CosineAgainstDftOracle) {
  std::vector<double> x(8);
  for (std::size_t n = 0; n < 8; ++n) x[n] = std::cos(2.0 * std::numbers::pi * 2.0 * n / 8.0);
  const auto oracle = naive_power_spectrum(x, 8);
  ASSERT_NEAR(oracle[2], 16.0, 1e-12);  // (N/2)^2
  const auto p = power_spectrum(x, 8);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], oracle[k], 1e-12);
}

TEST(PowerSpectrum, ZeroPaddedRandomFramesMatchOracle) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> dist;
  std::vector<double> x(400);
  for (double& v : x) v = dist(gen);
  const auto p = power_spectrum(x, 512);
  ASSERT_EQ(p.size(), 257u);
  const auto oracle = naive_power_spectrum(x, 512);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], oracle[k], 1e-9 * (1.0 + oracle[k]));
}

TEST(MelScale, ClosedForm) {
  EXPECT_NEAR(hz_to_mel(700.0), 1127.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(hz_to_mel(700.0), 781.1769, 1e-4);
  EXPECT_EQ(hz_to_mel(0.0), 0.0);
  for (double f : {10.0, 440.0, 8000.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(f)), f, 1e-9);
}

// Index of the peak of each filter row, read back as a frequency.
std::vector<std::size_t> peak_bins(const Matrix& bank) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < bank.rows(); ++j) {
    const auto r = bank.row(j);
    out.push_back(static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin()));
  }
  return out;
}

TEST(Filterbank, RowsAreUnimodalWithUnitPeak) {
  for (auto scale : {FrequencyScale::kMel, FrequencyScale::kLinear}) {
    SpectralConfig cfg;
    cfg.scale = scale;
    const Matrix bank = build_filterbank(cfg, 16000);
    ASSERT_EQ(bank.rows(), 40u);
    ASSERT_EQ(bank.cols(), 257u);
    for (std::size_t j = 0; j < bank.rows(); ++j) {
      const auto r = bank.row(j);
      EXPECT_EQ(*std::max_element(r.begin(), r.end()), 1.0);
      EXPECT_GE(*std::min_element(r.begin(), r.end()), 0.0);
      // Non-decreasing up to the peak, non-increasing after it.
      const std::size_t peak = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
      for (std::size_t k = 1; k <= peak; ++k) EXPECT_LE(r[k - 1], r[k]);
      for (std::size_t k = peak + 1; k < r.size(); ++k) EXPECT_GE(r[k - 1], r[k]);
    }
    const auto peaks = peak_bins(bank);
    EXPECT_TRUE(std::is_sorted(peaks.begin(), peaks.end()));
  }
}

TEST(Filterbank, LinearCentersAreEquallySpaced) {
  // 40 filters over 0..8000 Hz: 42 edges, spacing 8000 / 41 Hz. With a fine
  // FFT the peak bins land within one bin of each ideal center.
  SpectralConfig cfg;
  cfg.scale = FrequencyScale::kLinear;
  cfg.n_fft = 1 << 14;
  cfg.frame_len = 400;
  const Matrix bank = build_filterbank(cfg, 16000);
  const double spacing = 8000.0 / 41.0;
  EXPECT_NEAR(spacing, 195.12, 0.01);
  const double bin_hz = 16000.0 / static_cast<double>(cfg.n_fft);
  const auto peaks = peak_bins(bank);
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    EXPECT_NEAR(peaks[j] * bin_hz, spacing * static_cast<double>(j + 1), bin_hz);
  }
}

TEST(Filterbank, MelCentersFollowTheMelFormula) {
  SpectralConfig cfg;
  cfg.n_fft = 1 << 14;
  const Matrix bank = build_filterbank(cfg, 16000);
  const double top = 1127.0 * std::log(1.0 + 8000.0 / 700.0);
  const double bin_hz = 16000.0 / static_cast<double>(cfg.n_fft);
  const auto peaks = peak_bins(bank);
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    const double mel = top * static_cast<double>(j + 1) / 41.0;
    const double hz = 700.0 * (std::exp(mel / 1127.0) - 1.0);
    EXPECT_NEAR(peaks[j] * bin_hz, hz, bin_hz);
  }
}

TEST(Filterbank, TooDenseForFftIsRejected) {
  SpectralConfig cfg;
  cfg.n_filters = 200;
  cfg.n_coeffs = 20;
  EXPECT_THROW(build_filterbank(cfg, 16000), Error);
}

TEST(Dct, ConstantInput) {
  const std::vector<double> c(40, 2.5);
  const auto y = dct2(c);
  EXPECT_NEAR(y[0], 2.5 * std::sqrt(40.0), 1e-12);
  for (std::size_t k = 1; k < y.size(); ++k) EXPECT_NEAR(y[k], 0.0, 1e-12);
}

TEST(Dct, InverseRecoversInput) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> len(8, 64);
  std::normal_distribution<double> dist(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(len(gen));
    for (double& v : x) v = dist(gen);
    const auto back = dct3(dct2(x));
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(back[i], x[i], 1e-9);
  }
}

TEST(Dct, Orthonormal) {
  // Parseval: the transform preserves the Euclidean norm.
  std::vector<double> x{1.0, -2.0, 3.5, 0.25, 9.0, -4.0, 0.0, 1.0};
  const auto y = dct2(x);
  double nx = 0.0, ny = 0.0;
  for (double v : x) nx += v * v;
  for (double v : y) ny += v * v;
  EXPECT_NEAR(nx, ny, 1e-10);
}

TEST(CepstralFeatures, OneSecondShape) {
  for (auto scale : {FrequencyScale::kMel, FrequencyScale::kLinear}) {
    SpectralConfig cfg;
    cfg.scale = scale;
    const auto m = cepstral_features(test_tones(), cfg);
    EXPECT_EQ(m.rows(), 98u);
    EXPECT_EQ(m.cols(), 20u);
  }
}

TEST(CepstralFeatures, SilenceIsConstantAcrossFrames) {
  const AudioClip silence{{std::vector<double>(16000, 0.0)}, 16000};
  const auto m = cepstral_features(silence, SpectralConfig{});
  const double c0 = std::log(1e-10) * std::sqrt(40.0);
  for (std::size_t t = 0; t < m.rows(); ++t) {
    EXPECT_NEAR(m(t, 0), c0, 1e-9);
    for (std::size_t k = 1; k < m.cols(); ++k) EXPECT_NEAR(m(t, k), 0.0, 1e-9);
    for (std::size_t k = 0; k < m.cols(); ++k) EXPECT_EQ(m(t, k), m(0, k));
  }
}

// Pooled cepstra of test_tones() computed independently with numpy.fft.rfft
// and scipy.fft.dct(norm="ortho") under the same framing/filterbank rules.
constexpr double kMfccPooled[20] = {
    -15.064510949389863, 10.924371110881232, -5.589821953886098, -1.4224747618384779,
    -5.787840943321294,  -2.8940732122736748, -0.19709296290539013, -10.6727736286318,
    -4.6305694128875405, 8.706122524393024,  5.487404845031514,   4.08193373511414,
    3.3069636126972415,  -4.113796471340209, 0.15297390736458638, 3.621089222821824,
    -5.3309763028669686, -5.2355656420559065, -0.228805941195047, -0.728578451922814};
constexpr double kLfccPooled[20] = {
    -22.684008774758524, 19.37671555022497,  5.155200827668754,   0.6796504021950749,
    3.706413242350836,   5.758376530410468,  1.5625489501535743,  -4.975061087689421,
    -6.357313069650073,  -1.2311620959182368, 4.382836869138059,  4.681263897499835,
    0.8790113140255046,  -1.4781823806965497, 0.20407259542500192, 2.553529810185331,
    1.3681732717635366,  -3.1541869109614273, -6.685555970116381, -6.58559309213253};

TEST(CepstralFeatures, MatchesIndependentReference) {
  const auto mfcc = spectral_vector(test_tones(), FeatureSource::kMfcc, SpectralConfig{});
  const auto lfcc = spectral_vector(test_tones(), FeatureSource::kLfcc, SpectralConfig{});
  ASSERT_EQ(mfcc.dim(), 20u);
  ASSERT_EQ(lfcc.dim(), 20u);
  EXPECT_EQ(mfcc.source, FeatureSource::kMfcc);
  EXPECT_EQ(lfcc.source, FeatureSource::kLfcc);
  for (std::size_t k = 0; k < 20; ++k) {
    EXPECT_NEAR(mfcc.values[k], kMfccPooled[k], 1e-8) << "mfcc c" << k;
    EXPECT_NEAR(lfcc.values[k], kLfccPooled[k], 1e-8) << "lfcc c" << k;
  }
}

TEST(CepstralFeatures, GainShiftsOnlyC0) {
  const AudioClip base = test_tones();
  AudioClip louder = base;
  const double g = 1.7;
  for (double& s : louder.channels[0]) s *= g;
  const auto a = cepstral_features(base, SpectralConfig{});
  const auto b = cepstral_features(louder, SpectralConfig{});
  const double shift = std::sqrt(40.0) * std::log(g * g);
  for (std::size_t t = 0; t < a.rows(); ++t) {
    EXPECT_NEAR(b(t, 0) - a(t, 0), shift, 1e-8);
    for (std::size_t k = 1; k < a.cols(); ++k) EXPECT_NEAR(b(t, k), a(t, k), 1e-8);
  }
}

TEST(CepstralFeatures, RequiresMono) {
  const AudioClip stereo{{std::vector<double>(1000), std::vector<double>(1000)}, 16000};
  EXPECT_THROW(cepstral_features(stereo, SpectralConfig{}), Error);
}

TEST(TemporalMeanPool, Basics) {
  Matrix m(2, 2);
  m(0, 0) = 1; m(0, 1) = 3;
  m(1, 0) = 3; m(1, 1) = 5;
  const auto v = temporal_mean_pool(m, FeatureSource::kMfcc);
  EXPECT_EQ(v.values, (std::vector<double>{2, 4}));
  EXPECT_EQ(v.source, FeatureSource::kMfcc);

  Matrix one(1, 3);
  one(0, 0) = -1.5; one(0, 1) = 2.0; one(0, 2) = 7.0;
  EXPECT_EQ(temporal_mean_pool(one, FeatureSource::kLfcc).values,
            (std::vector<double>{-1.5, 2.0, 7.0}));

  EXPECT_THROW(temporal_mean_pool(Matrix(0, 3), FeatureSource::kMfcc), Error);
}

TEST(TemporalMeanPool, RowPermutationInvariant) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> small(-8, 8);
  for (int trial = 0; trial < 50; ++trial) {
    // Small integers keep every partial sum exact, so equality is bitwise.
    Matrix m(7, 5);
    for (double& v : m.values()) v = small(gen);
    std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 6};
    std::shuffle(order.begin(), order.end(), gen);
    Matrix p(7, 5);
    for (std::size_t r = 0; r < 7; ++r) {
      std::copy(m.row(order[r]).begin(), m.row(order[r]).end(), p.row(r).begin());
    }
    EXPECT_EQ(temporal_mean_pool(m, FeatureSource::kOther), temporal_mean_pool(p, FeatureSource::kOther));
  }
}

}  // namespace
}  // namespace comfeat
