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

#include "comfeat/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "comfeat/error.hpp"

namespace comfeat {
namespace {

using detail::append_bytes;
using detail::append_le;
using detail::read_le;

constexpr std::uint16_t kCodeTrillsson = 1;
constexpr std::uint16_t kCodeXvector = 2;
constexpr std::uint16_t kCodeOther = 255;

std::uint16_t source_code(FeatureSource source) {
  switch (source) {
    case FeatureSource::kTrillsson: return kCodeTrillsson;
    case FeatureSource::kXvector: return kCodeXvector;
    case FeatureSource::kOther: return kCodeOther;
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(to_string(source)) + " cannot be stored in an embedding file");
  }
}

void check_contract(FeatureSource source, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::kDimensionMismatch, "zero-dimensional embedding");
  if (auto want = contract_dim(source); want && *want != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(to_string(source)) + " embeddings are " + std::to_string(*want) +
                    "-dimensional, got " + std::to_string(dim));
  }
}

}  // namespace

EmbeddingHeader read_embedding_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CFEM", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a CFEM embedding file");
  }
  if (bytes.size() < kEmbeddingHeaderSize) {
    throw Error(ErrorCode::kTruncated, "header shorter than 16 bytes");
  }
  const auto version = read_le<std::uint16_t>(bytes, 4);
  if (version != kEmbeddingVersion) {
    throw Error(ErrorCode::kBadVersion, "unsupported CFEM version " + std::to_string(version));
  }
  EmbeddingHeader h;
  switch (read_le<std::uint16_t>(bytes, 6)) {
    case kCodeTrillsson: h.source = FeatureSource::kTrillsson; break;
    case kCodeXvector: h.source = FeatureSource::kXvector; break;
    case kCodeOther: h.source = FeatureSource::kOther; break;
    default:
      throw Error(ErrorCode::kDimensionMismatch,
                  "unknown source code " + std::to_string(read_le<std::uint16_t>(bytes, 6)));
  }
  h.n_frames = read_le<std::uint32_t>(bytes, 8);
  h.dim = read_le<std::uint32_t>(bytes, 12);
  if (h.n_frames == 0) throw Error(ErrorCode::kTruncated, "file declares zero frames");
  check_contract(h.source, h.dim);
  return h;
}

FeatureVector load_embedding(std::span<const std::uint8_t> bytes, FeatureSource expected_source) {
  const EmbeddingHeader h = read_embedding_header(bytes);
  if (h.source != expected_source) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected a " + std::string(to_string(expected_source)) + " embedding, file holds " +
                    std::string(to_string(h.source)));
  }
  const std::uint64_t payload = 4ull * h.n_frames * h.dim;
  if (bytes.size() - kEmbeddingHeaderSize < payload) {
    throw Error(ErrorCode::kTruncated, "payload holds " +
                                           std::to_string(bytes.size() - kEmbeddingHeaderSize) +
                                           " bytes, header promises " + std::to_string(payload));
  }

  FeatureVector v{h.source, std::vector<double>(h.dim, 0.0)};
  std::size_t off = kEmbeddingHeaderSize;
  for (std::uint32_t t = 0; t < h.n_frames; ++t) {
    for (std::uint32_t d = 0; d < h.dim; ++d, off += 4) {
      const float x = read_le<float>(bytes, off);
      if (!std::isfinite(x)) throw Error(ErrorCode::kNonFinite, "non-finite embedding value");
      v.values[d] += x;
    }
  }
  if (h.n_frames > 1) {
    for (double& x : v.values) x /= static_cast<double>(h.n_frames);
  }
  return v;
}

std::vector<std::uint8_t> store_embedding(const Matrix& frames, FeatureSource source) {
  const std::uint16_t code = source_code(source);
  if (frames.rows() == 0) throw Error(ErrorCode::kDimensionMismatch, "no frames to store");
  check_contract(source, frames.cols());
  if (frames.rows() > std::numeric_limits<std::uint32_t>::max() ||
      frames.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding too large for CFEM");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kEmbeddingHeaderSize + 4 * frames.values().size());
  append_bytes(out, "CFEM");
  append_le<std::uint16_t>(out, kEmbeddingVersion);
  append_le<std::uint16_t>(out, code);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(frames.rows()));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(frames.cols()));
  for (double x : frames.values()) append_le<float>(out, static_cast<float>(x));
  return out;
}

std::vector<std::uint8_t> store_embedding(const FeatureVector& v) {
  Matrix one(1, v.dim());
  std::copy(v.values.begin(), v.values.end(), one.values().begin());
  return store_embedding(one, v.source);
}

}  // namespace comfeat
