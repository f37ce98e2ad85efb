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

#ifndef COMFEAT_TESTS_SUPPORT_FIXTURES_HPP_
#define COMFEAT_TESTS_SUPPORT_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "comfeat/audio_io.hpp"
#include "comfeat/embeddings.hpp"
#include "comfeat/neuralnet.hpp"
#include "comfeat/synthetic.hpp"

namespace comfeat::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("comfeat-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::uint8_t> silent_wav(double seconds = 1.0, int rate = 16000) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  return encode_wav_pcm16(AudioClip{{std::vector<double>(n, 0.0)}, rate});
}

inline std::vector<std::uint8_t> tone_wav(double freq, double amp, double seconds, int rate) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate);
  }
  return encode_wav_pcm16(AudioClip{{x}, rate});
}

inline std::vector<std::uint8_t> zero_cfem(FeatureSource source, std::size_t dim) {
  return store_embedding(FeatureVector{source, std::vector<double>(dim, 0.0)});
}

// n utterances on disk: u<i>.wav (0.5 s tone at 8 kHz), u<i>.cfem (trillsson)
// and manifest.csv. Returns the manifest text.
inline std::string write_small_corpus(const std::filesystem::path& dir, std::size_t n,
                                      std::uint64_t seed = 3) {
  std::string csv = "id,audio_path,trillsson_path,xvector_path,score\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "u" + std::to_string(i);
    const double score = static_cast<double>((i * 7) % 25);
    write_bytes(dir / (id + ".wav"), tone_wav(200.0 + 37.0 * static_cast<double>(i),
                                             0.05 + 0.03 * static_cast<double>(i % 5), 0.5, 8000));
    write_bytes(dir / (id + ".cfem"),
                store_embedding(synthetic_embedding(id, seed, 1024, FeatureSource::kTrillsson)));
    csv += id + "," + id + ".wav," + id + ".cfem,," + std::to_string(score) + "\n";
  }
  write_text(dir / "manifest.csv", csv);
  return csv;
}

// Each utterance carries two amplitudes a, b ~ U(0.5, 1.5): a scales a
// 1024-d "neural" vector and b a 20-d "spectral" one. The target
// 12 (a - 0.5) + 12 (b - 0.5) needs both branches; either one alone leaves
// an irreducible RMSE of 12 / sqrt(12).
inline std::vector<Example> two_source_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::vector<Example> out;
  out.reserve(n);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof id, "mix%04zu", i);
    const double a = amp(gen);
    const double b = amp(gen);
    FeatureVector neural = synthetic_embedding(id, seed, 1024, FeatureSource::kTrillsson);
    FeatureVector spectral = synthetic_embedding(id, ~seed, 20, FeatureSource::kMfcc);
    for (double& x : neural.values) x *= a;
    for (double& x : spectral.values) x *= b;
    out.push_back({{std::move(neural), std::move(spectral)}, 12.0 * (a - 0.5) + 12.0 * (b - 0.5)});
  }
  return out;
}

// Keeps only the listed branches of every example.
inline std::vector<Example> select_branches(std::span<const Example> data,
                                            std::span<const std::size_t> keep) {
  std::vector<Example> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    Example e{{}, ex.target};
    for (std::size_t k : keep) e.inputs.push_back(ex.inputs[k]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace comfeat::testing

#endif  // COMFEAT_TESTS_SUPPORT_FIXTURES_HPP_
