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

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "comfeat/error.hpp"

namespace comfeat {
namespace {

// FFTW planning is not thread-safe, execution on fresh arrays is. Plans are
// created once per size under a lock and reused through the new-array
// execute interface.
struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

template <typename T>
struct FftwFree {
  void operator()(T* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwFree<double>>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwFree<fftw_complex>>;

fftw_plan r2c_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, PlanPtr> plans;
  std::lock_guard lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second.get();
  RealBuffer in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  ComplexBuffer out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
  PlanPtr plan(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  return plans.emplace(n, std::move(plan)).first->second.get();
}

// Scratch buffers for repeated transforms of one size.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t n_fft)
      : n_(n_fft),
        plan_(r2c_plan(n_fft)),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n_fft))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n_fft / 2 + 1)))) {}

  void compute(std::span<const double> frame, std::span<double> power) {
    std::fill_n(in_.get(), n_, 0.0);
    std::copy(frame.begin(), frame.end(), in_.get());
    fftw_execute_dft_r2c(plan_, in_.get(), out_.get());
    for (std::size_t k = 0; k <= n_ / 2; ++k) {
      const double re = out_.get()[k][0];
      const double im = out_.get()[k][1];
      power[k] = re * re + im * im;
    }
  }

 private:
  std::size_t n_;
  fftw_plan plan_;
  RealBuffer in_;
  ComplexBuffer out_;
};

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::kBadConfig, what);
}

}  // namespace

void SpectralConfig::validate() const {
  if (hop == 0 || hop > frame_len) bad_config("need 0 < hop <= frame_len");
  if (frame_len > n_fft) bad_config("need frame_len <= n_fft");
  if (!std::has_single_bit(n_fft)) bad_config("n_fft must be a power of two");
  if (n_coeffs == 0 || n_coeffs > n_filters) bad_config("need 0 < n_coeffs <= n_filters");
  if (!(log_floor > 0.0) || !std::isfinite(log_floor)) bad_config("log_floor must be positive");
}

double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

FeatureMatrix frame_signal(std::span<const double> samples, const SpectralConfig& cfg) {
  cfg.validate();
  if (samples.size() < cfg.frame_len) {
    throw Error(ErrorCode::kTooShort, std::to_string(samples.size()) +
                                          " samples is shorter than one frame of " +
                                          std::to_string(cfg.frame_len));
  }
  const std::size_t n_frames = (samples.size() - cfg.frame_len) / cfg.hop + 1;
  std::vector<double> window(cfg.frame_len, 1.0);
  if (cfg.frame_len > 1) {
    const double denom = static_cast<double>(cfg.frame_len - 1);
    for (std::size_t n = 0; n < cfg.frame_len; ++n) {
      window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
    }
  }
  FeatureMatrix frames(n_frames, cfg.frame_len);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const auto src = samples.subspan(i * cfg.hop, cfg.frame_len);
    auto dst = frames.row(i);
    for (std::size_t n = 0; n < cfg.frame_len; ++n) dst[n] = src[n] * window[n];
  }
  return frames;
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
  if (n_fft == 0 || frame.size() > n_fft) {
    throw Error(ErrorCode::kInvalidArgument, "frame longer than n_fft");
  }
  std::vector<double> power(n_fft / 2 + 1);
  PowerSpectrum(n_fft).compute(frame, power);
  return power;
}

Matrix build_filterbank(const SpectralConfig& cfg, int sample_rate) {
  cfg.validate();
  if (sample_rate <= 0) throw Error(ErrorCode::kInvalidArgument, "sample rate must be positive");
  const double nyquist = sample_rate / 2.0;
  const std::size_t n_points = cfg.n_filters + 2;
  std::vector<double> edges(n_points);
  if (cfg.scale == FrequencyScale::kMel) {
    const double top = hz_to_mel(nyquist);
    for (std::size_t i = 0; i < n_points; ++i) {
      edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_points - 1));
    }
  } else {
    for (std::size_t i = 0; i < n_points; ++i) {
      edges[i] = nyquist * static_cast<double>(i) / static_cast<double>(n_points - 1);
    }
  }
  edges.back() = nyquist;

  const std::size_t n_bins = cfg.n_fft / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(cfg.n_fft);
  Matrix bank(cfg.n_filters, n_bins);
  for (std::size_t j = 0; j < cfg.n_filters; ++j) {
    const double lo = edges[j], center = edges[j + 1], hi = edges[j + 2];
    auto row = bank.row(j);
    double peak = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= center) {
        w = (f - lo) / (center - lo);
      } else if (f > center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      row[k] = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0) {
      bad_config("filter " + std::to_string(j) + " covers no FFT bin; lower n_filters or raise n_fft");
    }
    for (double& w : row) w /= peak;
  }
  return bank;
}

std::vector<double> dct2(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const double scale0 = std::sqrt(1.0 / static_cast<double>(n));
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
    }
    out[k] = (k == 0 ? scale0 : scale) * acc;
  }
  return out;
}

std::vector<double> dct3(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const double scale0 = std::sqrt(1.0 / static_cast<double>(n));
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = scale0 * x[0];
    for (std::size_t k = 1; k < n; ++k) {
      acc += scale * x[k] *
             std::cos(std::numbers::pi * static_cast<double>(k) *
                      (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
    }
    out[i] = acc;
  }
  return out;
}

FeatureMatrix cepstral_features(const AudioClip& clip, const SpectralConfig& cfg) {
  if (clip.channel_count() != 1) {
    throw Error(ErrorCode::kNotMono, "cepstral features need a mono clip");
  }
  const FeatureMatrix frames = frame_signal(clip.channels.front(), cfg);
  const Matrix bank = build_filterbank(cfg, clip.sample_rate);

  // Orthonormal DCT-II basis, first n_coeffs rows only.
  const std::size_t nf = cfg.n_filters;
  Matrix basis(cfg.n_coeffs, nf);
  for (std::size_t k = 0; k < cfg.n_coeffs; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(nf));
    for (std::size_t i = 0; i < nf; ++i) {
      basis(k, i) = s * std::cos(std::numbers::pi * static_cast<double>(k) *
                                 (2.0 * static_cast<double>(i) + 1.0) /
                                 (2.0 * static_cast<double>(nf)));
    }
  }

  PowerSpectrum fft(cfg.n_fft);
  std::vector<double> power(cfg.n_fft / 2 + 1);
  std::vector<double> log_energy(nf);
  FeatureMatrix out(frames.rows(), cfg.n_coeffs);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    fft.compute(frames.row(t), power);
    for (std::size_t j = 0; j < nf; ++j) {
      const auto w = bank.row(j);
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += w[k] * power[k];
      log_energy[j] = std::log(std::max(e, cfg.log_floor));
    }
    auto dst = out.row(t);
    for (std::size_t k = 0; k < cfg.n_coeffs; ++k) {
      const auto b = basis.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < nf; ++j) acc += b[j] * log_energy[j];
      dst[k] = acc;
    }
  }
  return out;
}

FeatureVector temporal_mean_pool(const FeatureMatrix& m, FeatureSource source) {
  if (m.rows() == 0) throw Error(ErrorCode::kEmptyMatrix, "cannot pool zero frames");
  FeatureVector v{source, std::vector<double>(m.cols(), 0.0)};
  for (std::size_t t = 0; t < m.rows(); ++t) {
    const auto r = m.row(t);
    for (std::size_t c = 0; c < m.cols(); ++c) v.values[c] += r[c];
  }
  for (double& x : v.values) x /= static_cast<double>(m.rows());
  return v;
}

FeatureVector spectral_vector(const AudioClip& clip, FeatureSource source, SpectralConfig cfg) {
  if (!is_spectral(source)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(to_string(source)) + " is not a spectral feature");
  }
  cfg.scale = source == FeatureSource::kMfcc ? FrequencyScale::kMel : FrequencyScale::kLinear;
  return temporal_mean_pool(cepstral_features(clip, cfg), source);
}

}  // namespace comfeat
