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

#ifndef COMFEAT_AUDIO_IO_HPP_
#define COMFEAT_AUDIO_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace comfeat {

inline constexpr int kModelSampleRate = 16000;
inline constexpr double kMaxClipSeconds = 600.0;

// Decoded PCM audio. All channels have the same length and samples lie in
// [-1, 1].
struct AudioClip {
  std::vector<std::vector<double>> channels;
  int sample_rate = 0;

  std::size_t channel_count() const { return channels.size(); }
  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
  }

  bool operator==(const AudioClip&) const = default;
};

// Parses a RIFF/WAVE byte stream. Accepts 16-bit integer PCM (scaled by
// 1/32768) and 32-bit IEEE float PCM, including WAVE_FORMAT_EXTENSIBLE
// wrappers around either. Throws kMalformedFile, kUnsupportedFormat, or
// kTooLong for clips over kMaxClipSeconds.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

// Encodes as 16-bit PCM, rounding x * 32768 and saturating to int16.
std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip);

// Encodes as 32-bit IEEE float PCM.
std::vector<std::uint8_t> encode_wav_float32(const AudioClip& clip);

// Per-frame arithmetic mean across channels. Mono input is returned as is.
AudioClip to_mono(const AudioClip& clip);

// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel
// (beta 8.6, 32 zero crossings per side at the lower of the two rates).
// Output length is round(frames * target / source). Throws kNotMono.
AudioClip resample(const AudioClip& clip, int target_rate);

// decode-side preprocessing used by the serving path: mono mixdown followed
// by resampling to kModelSampleRate.
AudioClip prepare_for_model(const AudioClip& clip);

}  // namespace comfeat

#endif  // COMFEAT_AUDIO_IO_HPP_
