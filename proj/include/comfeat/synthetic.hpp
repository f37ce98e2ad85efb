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

#ifndef COMFEAT_SYNTHETIC_HPP_
#define COMFEAT_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "comfeat/features.hpp"
#include "comfeat/neuralnet.hpp"

namespace comfeat {

// Deterministic stand-ins for pretrained-model embeddings so the full stack
// runs without the external models.

// 64-bit FNV-1a, stable across platforms.
std::uint64_t fnv1a64(std::string_view text);

// Standard-normal vector seeded by hash(id) ^ seed (Box-Muller over mt19937_64),
// with values rounded to float precision.
FeatureVector synthetic_embedding(std::string_view utterance_id, std::uint64_t seed,
                                  std::size_t dim, FeatureSource source);

// n utterances "utt0000".. with one synthetic branch each and
// target = clamp(24 * mean(embedding), 0, 24).
std::vector<Example> synthetic_mean_corpus(std::size_t n, std::size_t dim,
                                           FeatureSource source, std::uint64_t seed);

}  // namespace comfeat

#endif  // COMFEAT_SYNTHETIC_HPP_
