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

#ifndef COMFEAT_TESTS_SUPPORT_GRADCHECK_HPP_
#define COMFEAT_TESTS_SUPPORT_GRADCHECK_HPP_

#include <algorithm>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "comfeat/neuralnet.hpp"
#include "support/oracles.hpp"

namespace comfeat::testing {

// Small random architecture: 1-3 branches, 1-2 hidden layers.
inline ModelConfig random_small_config(std::mt19937_64& gen) {
  auto pick = [&gen](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  };
  ModelConfig cfg;
  cfg.kernel_size = pick(1, 4);
  cfg.conv_filters = pick(2, 5);
  const std::size_t n_branches = pick(1, 3);
  for (std::size_t b = 0; b < n_branches; ++b) {
    cfg.branches.push_back({FeatureSource::kOther, pick(cfg.kernel_size, 10)});
  }
  cfg.fcn_dims.assign(pick(1, 2), 0);
  for (auto& d : cfg.fcn_dims) d = pick(2, 6);
  cfg.dropout_p = 0.0;
  cfg.seed = gen();
  return cfg;
}

// Seeded model with biases drawn away from zero, so few units start dead.
inline FusionModel random_model(const ModelConfig& cfg, std::mt19937_64& gen) {
  FusionModel model = init_model(cfg);
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  const auto& layout = model.layout();
  for (std::size_t b = 0; b < cfg.branches.size(); ++b) {
    for (double& x : model.tensor(layout.conv_bias(b))) x = bias(gen);
  }
  for (std::size_t l = 0; l < layout.dense_layers(); ++l) {
    for (double& x : model.tensor(layout.dense_bias(l))) x = bias(gen);
  }
  return model;
}

inline std::vector<Example> random_batch(const ModelConfig& cfg, std::size_t n,
                                         std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  std::vector<Example> batch(n);
  for (auto& ex : batch) {
    for (const Branch& br : cfg.branches) {
      FeatureVector v{br.source, std::vector<double>(br.input_dim)};
      for (double& x : v.values) x = normal(gen);
      ex.inputs.push_back(std::move(v));
    }
    ex.target = 3.0 * normal(gen);
  }
  return batch;
}

// Batch MSE recomputed from infer-mode predictions only.
inline double batch_mse(const FusionModel& model, std::span<const Example> batch) {
  double sum = 0.0;
  for (const auto& ex : batch) {
    const double r = predict(model, ex.inputs) - ex.target;
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

// Largest relative error between the analytic gradient and central
// differences of batch_mse over every parameter coordinate.
inline double max_gradient_error(const FusionModel& model, std::span<const Example> batch,
                                 double h = 1e-5) {
  Rng unused(0);
  const auto analytic = loss_and_gradients(model, batch, Mode::kInfer, unused).gradients;
  FusionModel probe = model;
  auto params = probe.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double numeric =
        central_difference([&] { return batch_mse(probe, batch); }, params[i], h);
    worst = std::max(worst, gradient_relative_error(analytic[i], numeric));
  }
  return worst;
}

}  // namespace comfeat::testing

#endif  // COMFEAT_TESTS_SUPPORT_GRADCHECK_HPP_
