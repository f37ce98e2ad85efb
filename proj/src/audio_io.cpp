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

#include "comfeat/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

#include "byte_io.hpp"
#include "comfeat/error.hpp"

namespace comfeat {
namespace {

using detail::append_bytes;
using detail::append_le;
using detail::read_le;

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct WavFormat {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedFile, what);
}

WavFormat parse_fmt(std::span<const std::uint8_t> chunk) {
  if (chunk.size() < 16) malformed("fmt chunk shorter than 16 bytes");
  WavFormat fmt;
  fmt.tag = read_le<std::uint16_t>(chunk, 0);
  fmt.channels = read_le<std::uint16_t>(chunk, 2);
  fmt.sample_rate = read_le<std::uint32_t>(chunk, 4);
  fmt.block_align = read_le<std::uint16_t>(chunk, 12);
  fmt.bits = read_le<std::uint16_t>(chunk, 14);
  if (fmt.tag == kFormatExtensible) {
    // cbSize(2) validBits(2) channelMask(4) then the subformat GUID, whose
    // first two bytes carry the plain format tag.
    if (chunk.size() < 40) malformed("extensible fmt chunk shorter than 40 bytes");
    fmt.tag = read_le<std::uint16_t>(chunk, 24);
  }
  if (fmt.channels == 0) malformed("zero channels");
  if (fmt.sample_rate == 0) malformed("zero sample rate");
  if (fmt.bits == 0 || fmt.block_align != fmt.channels * ((fmt.bits + 7) / 8)) {
    malformed("block alignment does not match channels and bit depth");
  }
  return fmt;
}

std::vector<std::uint8_t> encode_header(const AudioClip& clip, std::uint16_t tag,
                                        std::uint16_t bits) {
  if (clip.sample_rate <= 0 || clip.channels.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty clip");
  }
  const auto channels = static_cast<std::uint16_t>(clip.channel_count());
  const std::uint16_t block_align = channels * (bits / 8);
  const auto data_size = static_cast<std::uint32_t>(clip.frames() * block_align);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  append_bytes(out, "RIFF");
  append_le<std::uint32_t>(out, 36 + data_size);
  append_bytes(out, "WAVE");
  append_bytes(out, "fmt ");
  append_le<std::uint32_t>(out, 16);
  append_le<std::uint16_t>(out, tag);
  append_le<std::uint16_t>(out, channels);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * block_align);
  append_le<std::uint16_t>(out, block_align);
  append_le<std::uint16_t>(out, bits);
  append_bytes(out, "data");
  append_le<std::uint32_t>(out, data_size);
  return out;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

constexpr double kKaiserBeta = 8.6;
constexpr int kZeroCrossings = 32;

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) malformed("shorter than a RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) malformed("missing RIFF magic");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) malformed("missing WAVE form type");

  std::optional<WavFormat> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.subspan(pos, 4);
    const std::size_t size = read_le<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) malformed("chunk extends past end of file");
    const auto chunk = bytes.subspan(body, size);
    if (std::memcmp(id.data(), "fmt ", 4) == 0) {
      fmt = parse_fmt(chunk);
    } else if (std::memcmp(id.data(), "data", 4) == 0) {
      data = chunk;
    }
    pos = body + size + (size & 1);
  }
  if (!fmt) malformed("no fmt chunk");
  if (!data) malformed("no data chunk");

  const bool pcm16 = fmt->tag == kFormatPcm && fmt->bits == 16;
  const bool float32 = fmt->tag == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "format tag " + std::to_string(fmt->tag) + " with " +
                    std::to_string(fmt->bits) +
                    " bits; only 16-bit PCM and 32-bit float are supported");
  }
  if (data->size() % fmt->block_align != 0) malformed("data chunk holds a partial frame");

  const std::size_t frames = data->size() / fmt->block_align;
  if (static_cast<double>(frames) / fmt->sample_rate > kMaxClipSeconds) {
    throw Error(ErrorCode::kTooLong, "clip longer than " +
                                         std::to_string(static_cast<int>(kMaxClipSeconds)) +
                                         " s");
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt->sample_rate);
  clip.channels.assign(fmt->channels, std::vector<double>(frames));
  const std::size_t width = fmt->bits / 8;
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const std::size_t off = f * fmt->block_align + c * width;
      double s;
      if (pcm16) {
        s = read_le<std::int16_t>(*data, off) / 32768.0;
      } else {
        const float v = read_le<float>(*data, off);
        if (!std::isfinite(v)) malformed("non-finite float sample");
        s = std::clamp(static_cast<double>(v), -1.0, 1.0);
      }
      clip.channels[c][f] = s;
    }
  }
  return clip;
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip) {
  auto out = encode_header(clip, kFormatPcm, 16);
  for (std::size_t f = 0; f < clip.frames(); ++f) {
    for (const auto& ch : clip.channels) {
      const double scaled = std::round(ch[f] * 32768.0);
      append_le<std::int16_t>(
          out, static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_wav_float32(const AudioClip& clip) {
  auto out = encode_header(clip, kFormatFloat, 32);
  for (std::size_t f = 0; f < clip.frames(); ++f) {
    for (const auto& ch : clip.channels) append_le<float>(out, static_cast<float>(ch[f]));
  }
  return out;
}

AudioClip to_mono(const AudioClip& clip) {
  if (clip.channel_count() <= 1) return clip;
  AudioClip mono;
  mono.sample_rate = clip.sample_rate;
  mono.channels.assign(1, std::vector<double>(clip.frames(), 0.0));
  const double n = static_cast<double>(clip.channel_count());
  for (std::size_t f = 0; f < clip.frames(); ++f) {
    double sum = 0.0;
    for (const auto& ch : clip.channels) sum += ch[f];
    mono.channels[0][f] = sum / n;
  }
  return mono;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.channel_count() != 1) {
    throw Error(ErrorCode::kNotMono, "resample expects a single channel, got " +
                                         std::to_string(clip.channel_count()));
  }
  if (target_rate <= 0 || clip.sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample rates must be positive");
  }
  if (target_rate == clip.sample_rate) return clip;

  const auto g = std::gcd(clip.sample_rate, target_rate);
  const std::uint64_t up = static_cast<std::uint64_t>(target_rate / g);
  const std::uint64_t down = static_cast<std::uint64_t>(clip.sample_rate / g);

  // Cutoff relative to the input Nyquist frequency.
  const double cutoff = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  const double half_width = kZeroCrossings / cutoff;  // in input samples
  const auto taps_per_side = static_cast<std::int64_t>(std::ceil(half_width));
  const std::size_t taps = static_cast<std::size_t>(2 * taps_per_side);
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);

  // table[p * taps + i] weights input sample n0 - taps_per_side + 1 + i for
  // output phase p, where the output instant is n0 + p / up.
  std::vector<double> table(up * taps, 0.0);
  for (std::uint64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    for (std::size_t i = 0; i < taps; ++i) {
      const double tau = frac + static_cast<double>(taps_per_side - 1) - static_cast<double>(i);
      const double u = tau / half_width;
      if (std::abs(u) > 1.0) continue;
      const double window = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) / i0_beta;
      table[p * taps + i] = cutoff * sinc(cutoff * tau) * window;
    }
  }

  const auto& in = clip.channels.front();
  const auto n_in = static_cast<std::int64_t>(in.size());
  const std::uint64_t out_len = (in.size() * up + down / 2) / down;
  AudioClip out;
  out.sample_rate = target_rate;
  out.channels.assign(1, std::vector<double>(out_len, 0.0));
  auto& y = out.channels.front();
  for (std::uint64_t j = 0; j < out_len; ++j) {
    const std::uint64_t pos = j * down;
    const auto n0 = static_cast<std::int64_t>(pos / up);
    const std::uint64_t phase = pos % up;
    const double* w = table.data() + phase * taps;
    const std::int64_t first = n0 - taps_per_side + 1;
    const std::int64_t lo = std::max<std::int64_t>(0, first);
    const std::int64_t hi = std::min<std::int64_t>(n_in, first + static_cast<std::int64_t>(taps));
    double acc = 0.0;
    for (std::int64_t n = lo; n < hi; ++n) acc += in[static_cast<std::size_t>(n)] * w[n - first];
    y[j] = acc;
  }
  return out;
}

AudioClip prepare_for_model(const AudioClip& clip) {
  return resample(to_mono(clip), kModelSampleRate);
}

}  // namespace comfeat
