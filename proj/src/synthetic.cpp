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

#include "comfeat/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace comfeat {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

FeatureVector synthetic_embedding(std::string_view utterance_id, std::uint64_t seed,
                                  std::size_t dim, FeatureSource source) {
  Rng rng(fnv1a64(utterance_id) ^ seed);
  FeatureVector v{source, std::vector<double>(dim)};
  for (std::size_t i = 0; i < dim; i += 2) {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    // Rounded to float so a CFEM round trip is exact.
    v.values[i] = static_cast<float>(r * std::cos(2.0 * std::numbers::pi * u2));
    if (i + 1 < dim) v.values[i + 1] = static_cast<float>(r * std::sin(2.0 * std::numbers::pi * u2));
  }
  return v;
}

std::vector<Example> synthetic_mean_corpus(std::size_t n, std::size_t dim, FeatureSource source,
                                           std::uint64_t seed) {
  std::vector<Example> corpus;
  corpus.reserve(n);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof id, "utt%04zu", i);
    FeatureVector v = synthetic_embedding(id, seed, dim, source);
    const double mean = std::accumulate(v.values.begin(), v.values.end(), 0.0) /
                        static_cast<double>(dim);
    const double target = std::clamp(24.0 * mean, 0.0, 24.0);
    corpus.push_back({{std::move(v)}, target});
  }
  return corpus;
}

}  // namespace comfeat
