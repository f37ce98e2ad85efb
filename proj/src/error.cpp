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

#include "comfeat/error.hpp"

namespace comfeat {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kTooLong: return "TooLong";
    case ErrorCode::kNotMono: return "NotMono";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kBadVersion: return "BadVersion";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kInputTooShort: return "InputTooShort";
    case ErrorCode::kBranchMismatch: return "BranchMismatch";
    case ErrorCode::kBadProbability: return "BadProbability";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kBadHeader: return "BadHeader";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kBadRow: return "BadRow";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kNoTrainData: return "NoTrainData";
    case ErrorCode::kNonFinite: return "NonFinite";
  }
  return "Unknown";
}

}  // namespace comfeat
