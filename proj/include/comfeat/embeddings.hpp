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

#ifndef COMFEAT_EMBEDDINGS_HPP_
#define COMFEAT_EMBEDDINGS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "comfeat/features.hpp"

namespace comfeat {

// CFEM embedding file, little-endian:
//
//   offset  size  field
//   0       4     magic "CFEM"
//   4       2     version (1)
//   6       2     source code: 1 = trillsson, 2 = xvector, 255 = other
//   8       4     n_frames (>= 1)
//   12      4     dim
//   16      4*n_frames*dim  float32 payload, row-major (frame by frame)
inline constexpr std::size_t kEmbeddingHeaderSize = 16;
inline constexpr std::uint16_t kEmbeddingVersion = 1;

struct EmbeddingHeader {
  FeatureSource source = FeatureSource::kOther;
  std::uint32_t n_frames = 0;
  std::uint32_t dim = 0;
};

// Validates and returns the header without touching the payload.
EmbeddingHeader read_embedding_header(std::span<const std::uint8_t> bytes);

// Loads and mean-pools over frames. Throws kBadMagic, kBadVersion,
// kDimensionMismatch (source contract, or file source != expected) and
// kTruncated.
FeatureVector load_embedding(std::span<const std::uint8_t> bytes,
                             FeatureSource expected_source);

std::vector<std::uint8_t> store_embedding(const FeatureVector& v);
std::vector<std::uint8_t> store_embedding(const Matrix& frames, FeatureSource source);

}  // namespace comfeat

#endif  // COMFEAT_EMBEDDINGS_HPP_
