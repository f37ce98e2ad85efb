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

#ifndef COMFEAT_SPECTRAL_HPP_
#define COMFEAT_SPECTRAL_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "comfeat/audio_io.hpp"
#include "comfeat/features.hpp"

namespace comfeat {

enum class FrequencyScale { kMel, kLinear };

// Framing and filterbank parameters for the cepstral front-end. Defaults are
// 25 ms frames with a 10 ms hop at 16 kHz.
struct SpectralConfig {
  std::size_t frame_len = 400;
  std::size_t hop = 160;
  std::size_t n_fft = 512;
  std::size_t n_filters = 40;
  std::size_t n_coeffs = 20;
  FrequencyScale scale = FrequencyScale::kMel;
  double log_floor = 1e-10;

  // Throws kBadConfig unless 0 < hop <= frame_len <= n_fft, n_fft is a power
  // of two, 0 < n_coeffs <= n_filters and log_floor > 0.
  void validate() const;

  bool operator==(const SpectralConfig&) const = default;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Splits samples into overlapping frames and applies a Hamming window.
// Produces floor((N - frame_len) / hop) + 1 rows of frame_len values.
FeatureMatrix frame_signal(std::span<const double> samples, const SpectralConfig& cfg);

// One-sided, unnormalized power spectrum |X_k|^2, k = 0..n_fft/2, of the
// frame zero-padded to n_fft.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft);

// n_filters x (n_fft/2 + 1) triangular filterbank. Filter edges are
// n_filters + 2 points equally spaced on the mel or linear scale over
// [0, sample_rate / 2]; each row is scaled so its largest weight is 1.
Matrix build_filterbank(const SpectralConfig& cfg, int sample_rate);

// Orthonormal DCT-II and its inverse (orthonormal DCT-III).
std::vector<double> dct2(std::span<const double> x);
std::vector<double> dct3(std::span<const double> x);

// Per-frame cepstra: power spectrum, filterbank energies, natural log with
// the configured floor, orthonormal DCT-II, first n_coeffs kept. The clip
// must be mono; the filterbank is built for clip.sample_rate.
FeatureMatrix cepstral_features(const AudioClip& clip, const SpectralConfig& cfg);

// Column-wise mean over frames.
FeatureVector temporal_mean_pool(const FeatureMatrix& m, FeatureSource source);

// MFCC or LFCC pooled vector for a model-ready clip. The scale in cfg is
// overridden by the source.
FeatureVector spectral_vector(const AudioClip& clip, FeatureSource source,
                              SpectralConfig cfg);

}  // namespace comfeat

#endif  // COMFEAT_SPECTRAL_HPP_
