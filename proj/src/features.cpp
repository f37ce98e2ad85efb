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

#include "comfeat/features.hpp"

namespace comfeat {

std::string_view to_string(FeatureSource source) {
  switch (source) {
    case FeatureSource::kMfcc: return "mfcc";
    case FeatureSource::kLfcc: return "lfcc";
    case FeatureSource::kTrillsson: return "trillsson";
    case FeatureSource::kXvector: return "xvector";
    case FeatureSource::kOther: return "other";
  }
  return "other";
}

std::optional<FeatureSource> parse_feature_source(std::string_view name) {
  for (auto s : {FeatureSource::kMfcc, FeatureSource::kLfcc, FeatureSource::kTrillsson,
                 FeatureSource::kXvector, FeatureSource::kOther}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<std::size_t> contract_dim(FeatureSource source) {
  switch (source) {
    case FeatureSource::kTrillsson: return kTrillssonDim;
    case FeatureSource::kXvector: return kXvectorDim;
    default: return std::nullopt;
  }
}

}  // namespace comfeat
