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

#ifndef COMFEAT_ERROR_HPP_
#define COMFEAT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace comfeat {

// Every failure raised by the library carries one of these codes. The C API
// maps them one-to-one onto comfeat_status values, so the order is part of
// the ABI: append only.
enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  // audio_io
  kMalformedFile,
  kUnsupportedFormat,
  kTooLong,
  kNotMono,
  // spectral
  kTooShort,
  kEmptyMatrix,
  // embeddings
  kBadMagic,
  kBadVersion,
  kDimensionMismatch,
  kTruncated,
  // neuralnet
  kInputTooShort,
  kBranchMismatch,
  kBadProbability,
  kEmptyBatch,
  kShapeMismatch,
  kBadConfig,
  kConfigMismatch,
  // pipeline
  kBadHeader,
  kDuplicateId,
  kScoreOutOfRange,
  kBadRow,
  kEmpty,
  kMissingArtifact,
  kNoTrainData,
  kNonFinite,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace comfeat

#endif  // COMFEAT_ERROR_HPP_
