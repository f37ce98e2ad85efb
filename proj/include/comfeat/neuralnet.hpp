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

#ifndef COMFEAT_NEURALNET_HPP_
#define COMFEAT_NEURALNET_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "comfeat/features.hpp"

namespace comfeat {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits of one draw. Used instead of
// std::uniform_real_distribution, whose output is implementation-defined.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Branch {
  FeatureSource source = FeatureSource::kOther;
  std::size_t input_dim = 0;

  bool operator==(const Branch&) const = default;
};

struct ModelConfig {
  std::vector<Branch> branches;
  std::size_t conv_filters = 32;
  std::size_t kernel_size = 3;
  std::vector<std::size_t> fcn_dims{256, 90};
  double dropout_p = 0.2;
  std::uint64_t seed = 0;

  // Throws kBadConfig.
  void validate() const;
  std::size_t fused_dim() const { return conv_filters * branches.size(); }

  // Canonical JSON: sorted keys, no whitespace. Byte-stable for equal configs.
  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);

  bool operator==(const ModelConfig&) const = default;
};

// Offsets of every parameter tensor inside the flat parameter vector. The
// order is fixed and is also the serialization order:
//
//   for each branch (config order): conv weights [filters x kernel], conv bias [filters]
//   for each dense layer (fcn_dims..., then the 1-unit output):
//       weights [out x in], bias [out]
struct TensorSlot {
  std::size_t offset = 0;
  std::size_t size = 0;
};

class ParameterLayout {
 public:
  explicit ParameterLayout(const ModelConfig& config);

  TensorSlot conv_weights(std::size_t branch) const { return conv_w_[branch]; }
  TensorSlot conv_bias(std::size_t branch) const { return conv_b_[branch]; }
  // Dense layer l in [0, dense_layers()); the last one is the output head.
  TensorSlot dense_weights(std::size_t layer) const { return dense_w_[layer]; }
  TensorSlot dense_bias(std::size_t layer) const { return dense_b_[layer]; }
  std::size_t dense_layers() const { return dense_w_.size(); }
  std::size_t dense_in(std::size_t layer) const { return dense_in_[layer]; }
  std::size_t dense_out(std::size_t layer) const { return dense_out_[layer]; }
  std::size_t total() const { return total_; }

 private:
  std::vector<TensorSlot> conv_w_, conv_b_, dense_w_, dense_b_;
  std::vector<std::size_t> dense_in_, dense_out_;
  std::size_t total_ = 0;
};

// Per-branch conv + global max-pool, concatenation, ReLU dense stack with
// dropout, linear scalar output. Parameters are zero after construction; see
// init_model for the seeded initialization.
class FusionModel {
 public:
  explicit FusionModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> tensor(TensorSlot slot) { return {params_.data() + slot.offset, slot.size}; }
  std::span<const double> tensor(TensorSlot slot) const {
    return {params_.data() + slot.offset, slot.size};
  }

  bool operator==(const FusionModel& other) const {
    return config_ == other.config_ && params_ == other.params_;
  }

 private:
  ModelConfig config_;
  ParameterLayout layout_;
  std::vector<double> params_;
};

enum class Mode { kTrain, kInfer };

// Valid 1-D convolution, stride 1, single input channel. weights is
// filters x kernel row-major. Returns filters x (L - kernel + 1), passed
// through ReLU unless apply_relu is false. Throws kInputTooShort.
Matrix conv1d(std::span<const double> input, std::span<const double> weights,
              std::span<const double> bias, std::size_t kernel_size,
              bool apply_relu = true);

// Row-wise maximum of a F x T map, and the lowest column index attaining it.
std::vector<double> global_max_pool(const Matrix& map);
std::vector<std::size_t> global_argmax(const Matrix& map);

// Inverted dropout. Identity in kInfer mode or when p == 0. Throws
// kBadProbability unless 0 <= p < 1.
std::vector<double> dropout(std::span<const double> v, double p, Mode mode, Rng& rng);

// Throws kEmptyBatch, kShapeMismatch.
double mse_loss(std::span<const double> predictions, std::span<const double> targets);

// Infer-mode prediction. Deterministic; no RNG involved. Throws kBranchMismatch.
double predict(const FusionModel& model, std::span<const FeatureVector> inputs);

// Single forward pass in the given mode. rng is only consumed in kTrain mode
// with dropout_p > 0.
double forward(const FusionModel& model, std::span<const FeatureVector> inputs,
               Mode mode, Rng& rng);

struct Example {
  std::vector<FeatureVector> inputs;
  double target = 0.0;
};

struct LossAndGradients {
  double loss = 0.0;
  std::vector<double> gradients;  // same layout as FusionModel::parameters()
};

// Mean squared error over the batch and its exact gradient. In kTrain mode a
// dropout mask is drawn per example and reused by the backward pass; kInfer
// disables dropout. Examples are accumulated in ascending index order.
// Throws kEmptyBatch, kBranchMismatch.
LossAndGradients loss_and_gradients(const FusionModel& model,
                                    std::span<const Example> batch, Mode mode,
                                    Rng& rng);
// Same, over batch = data[indices[0]], data[indices[1]], ...
LossAndGradients loss_and_gradients(const FusionModel& model,
                                    std::span<const Example> data,
                                    std::span<const std::size_t> indices,
                                    Mode mode, Rng& rng);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(std::size_t parameter_count, AdamOptions options = {});

  // One bias-corrected Adam update in place. Throws kShapeMismatch.
  void step(std::span<double> params, std::span<const double> grads);

  std::uint64_t step_count() const { return t_; }
  const AdamOptions& options() const { return options_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  AdamOptions options_;
  std::uint64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// He-uniform weights (bound sqrt(6 / fan_in)), zero biases, driven only by
// config.seed. Throws kBadConfig.
FusionModel init_model(const ModelConfig& config);

// CFWT weight file:
//
//   "CFWT" | u16 version (1) | u32 json_len | canonical config JSON
//   | parameter_count float64 values in ParameterLayout order
//
// All integers and floats little-endian.
inline constexpr std::uint16_t kWeightsVersion = 1;

std::vector<std::uint8_t> save_weights(const FusionModel& model);
// Throws kBadMagic, kBadVersion, kTruncated, kConfigMismatch.
FusionModel load_weights(std::span<const std::uint8_t> bytes);

}  // namespace comfeat

#endif  // COMFEAT_NEURALNET_HPP_
