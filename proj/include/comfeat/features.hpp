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

#ifndef COMFEAT_FEATURES_HPP_
#define COMFEAT_FEATURES_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace comfeat {

// Where a feature vector came from. Spectral sources are computed in-process;
// neural sources arrive as precomputed embedding files.
enum class FeatureSource { kMfcc, kLfcc, kTrillsson, kXvector, kOther };

std::string_view to_string(FeatureSource source);
std::optional<FeatureSource> parse_feature_source(std::string_view name);

inline bool is_spectral(FeatureSource source) {
  return source == FeatureSource::kMfcc || source == FeatureSource::kLfcc;
}

// Fixed dimension required by a neural source, or nullopt when the dimension
// is configuration-dependent (spectral) or unconstrained (other).
std::optional<std::size_t> contract_dim(FeatureSource source);

inline constexpr std::size_t kTrillssonDim = 1024;
inline constexpr std::size_t kXvectorDim = 512;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// frames x coefficients, one row per analysis frame.
using FeatureMatrix = Matrix;

// Fixed-dimension vector that feeds one model branch.
struct FeatureVector {
  FeatureSource source = FeatureSource::kOther;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

}  // namespace comfeat

#endif  // COMFEAT_FEATURES_HPP_
