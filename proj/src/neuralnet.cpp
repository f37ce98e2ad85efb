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

#include "comfeat/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "json.hpp"

#include "byte_io.hpp"
#include "comfeat/error.hpp"

namespace comfeat {
namespace {

using detail::append_bytes;
using detail::append_le;
using detail::read_le;
using json = nlohmann::json;

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::kBadConfig, what);
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

void check_branches(const ModelConfig& config, std::span<const FeatureVector> inputs) {
  if (inputs.size() != config.branches.size()) {
    throw Error(ErrorCode::kBranchMismatch, "model has " + std::to_string(config.branches.size()) +
                                                " branches, got " + std::to_string(inputs.size()) +
                                                " inputs");
  }
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const Branch& want = config.branches[b];
    if (inputs[b].source != want.source || inputs[b].dim() != want.input_dim) {
      throw Error(ErrorCode::kBranchMismatch,
                  "branch " + std::to_string(b) + " expects " + std::string(to_string(want.source)) +
                      "[" + std::to_string(want.input_dim) + "], got " +
                      std::string(to_string(inputs[b].source)) + "[" +
                      std::to_string(inputs[b].dim()) + "]");
    }
  }
}

// Activations kept by a training-mode forward pass for the backward pass.
struct Trace {
  // Per branch and filter: conv pre-activation maximum and its lowest argmax.
  std::vector<double> conv_max;
  std::vector<std::size_t> conv_argmax;
  // h[l] is the input to dense layer l; h[0] is the fused vector.
  std::vector<std::vector<double>> h;
  // Pre-activations and dropout multipliers of the hidden dense layers.
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> mask;
  double prediction = 0.0;
};

void draw_mask(std::vector<double>& mask, std::size_t n, double p, Mode mode, Rng& rng) {
  mask.assign(n, 1.0);
  if (mode == Mode::kInfer || p == 0.0) return;
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = uniform01(rng) < p ? 0.0 : keep_scale;
}

void run_forward(const FusionModel& model, std::span<const FeatureVector> inputs, Mode mode,
                 Rng& rng, Trace& tr) {
  const ModelConfig& cfg = model.config();
  const ParameterLayout& layout = model.layout();
  check_branches(cfg, inputs);

  const std::size_t filters = cfg.conv_filters;
  const std::size_t kernel = cfg.kernel_size;
  const std::size_t fused = cfg.fused_dim();
  tr.conv_max.assign(fused, 0.0);
  tr.conv_argmax.assign(fused, 0);
  tr.h.assign(layout.dense_layers(), {});
  tr.z.assign(layout.dense_layers() - 1, {});
  tr.mask.assign(layout.dense_layers() - 1, {});

  auto& x0 = tr.h[0];
  x0.assign(fused, 0.0);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto& x = inputs[b].values;
    const auto w = model.tensor(layout.conv_weights(b));
    const auto bias = model.tensor(layout.conv_bias(b));
    const std::size_t positions = x.size() - kernel + 1;
    for (std::size_t f = 0; f < filters; ++f) {
      const double* wf = w.data() + f * kernel;
      double best = 0.0;
      std::size_t best_at = 0;
      for (std::size_t i = 0; i < positions; ++i) {
        double acc = bias[f];
        for (std::size_t k = 0; k < kernel; ++k) acc += wf[k] * x[i + k];
        if (i == 0 || acc > best) {
          best = acc;
          best_at = i;
        }
      }
      const std::size_t slot = b * filters + f;
      tr.conv_max[slot] = best;
      tr.conv_argmax[slot] = best_at;
      x0[slot] = relu(best);
    }
  }

  for (std::size_t l = 0; l < layout.dense_layers(); ++l) {
    const auto w = model.tensor(layout.dense_weights(l));
    const auto bias = model.tensor(layout.dense_bias(l));
    const std::size_t in = layout.dense_in(l);
    const std::size_t out = layout.dense_out(l);
    const auto& h = tr.h[l];
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.data() + o * in;
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * h[i];
      z[o] = acc;
    }
    if (l + 1 == layout.dense_layers()) {
      tr.prediction = z[0];
      break;
    }
    draw_mask(tr.mask[l], out, cfg.dropout_p, mode, rng);
    auto& next = tr.h[l + 1];
    next.resize(out);
    for (std::size_t o = 0; o < out; ++o) next[o] = relu(z[o]) * tr.mask[l][o];
    tr.z[l] = std::move(z);
  }
}

// Adds d(loss)/d(params) for one example, given d(loss)/d(prediction).
void backward(const FusionModel& model, std::span<const FeatureVector> inputs, const Trace& tr,
              double dpred, std::span<double> grad) {
  const ModelConfig& cfg = model.config();
  const ParameterLayout& layout = model.layout();

  std::vector<double> g{dpred};
  for (std::size_t l = layout.dense_layers(); l-- > 0;) {
    const auto w = model.tensor(layout.dense_weights(l));
    const TensorSlot ws = layout.dense_weights(l);
    const TensorSlot bs = layout.dense_bias(l);
    const std::size_t in = layout.dense_in(l);
    const std::size_t out = layout.dense_out(l);
    const auto& h = tr.h[l];
    std::vector<double> dh(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double go = g[o];
      grad[bs.offset + o] += go;
      if (go == 0.0) continue;
      double* gw = grad.data() + ws.offset + o * in;
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        gw[i] += go * h[i];
        dh[i] += go * row[i];
      }
    }
    if (l > 0) {
      const auto& z = tr.z[l - 1];
      const auto& mask = tr.mask[l - 1];
      for (std::size_t i = 0; i < in; ++i) dh[i] = z[i] > 0.0 ? dh[i] * mask[i] : 0.0;
    }
    g = std::move(dh);
  }

  // g is now d(loss)/d(fused). Max-pool routes it to the argmax position only.
  const std::size_t filters = cfg.conv_filters;
  const std::size_t kernel = cfg.kernel_size;
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto& x = inputs[b].values;
    const TensorSlot ws = layout.conv_weights(b);
    const TensorSlot bs = layout.conv_bias(b);
    for (std::size_t f = 0; f < filters; ++f) {
      const std::size_t slot = b * filters + f;
      if (tr.conv_max[slot] <= 0.0 || g[slot] == 0.0) continue;
      const double d = g[slot];
      grad[bs.offset + f] += d;
      const std::size_t at = tr.conv_argmax[slot];
      for (std::size_t k = 0; k < kernel; ++k) grad[ws.offset + f * kernel + k] += d * x[at + k];
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (branches.empty()) bad_config("at least one branch is required");
  if (conv_filters == 0) bad_config("conv_filters must be positive");
  if (kernel_size == 0) bad_config("kernel_size must be positive");
  for (const Branch& b : branches) {
    if (b.input_dim < kernel_size) {
      bad_config(std::string(to_string(b.source)) + " branch dim " + std::to_string(b.input_dim) +
                 " is smaller than the kernel");
    }
    if (auto want = contract_dim(b.source); want && *want != b.input_dim) {
      bad_config(std::string(to_string(b.source)) + " branches must be " + std::to_string(*want) +
                 "-dimensional");
    }
  }
  for (std::size_t d : fcn_dims) {
    if (d == 0) bad_config("dense layer sizes must be positive");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) bad_config("dropout_p must lie in [0, 1)");
}

std::string ModelConfig::to_json() const {
  json j;
  j["branches"] = json::array();
  for (const Branch& b : branches) {
    j["branches"].push_back({{"source", std::string(to_string(b.source))}, {"dim", b.input_dim}});
  }
  j["conv_filters"] = conv_filters;
  j["kernel_size"] = kernel_size;
  j["fcn_dims"] = fcn_dims;
  j["dropout_p"] = dropout_p;
  j["seed"] = seed;
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  ModelConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.branches.clear();
    for (const auto& b : j.at("branches")) {
      const auto name = b.at("source").get<std::string>();
      const auto source = parse_feature_source(name);
      if (!source) bad_config("unknown feature source '" + name + "'");
      cfg.branches.push_back({*source, b.at("dim").get<std::size_t>()});
    }
    cfg.conv_filters = j.at("conv_filters").get<std::size_t>();
    cfg.kernel_size = j.at("kernel_size").get<std::size_t>();
    cfg.fcn_dims = j.at("fcn_dims").get<std::vector<std::size_t>>();
    cfg.dropout_p = j.at("dropout_p").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    bad_config(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ParameterLayout::ParameterLayout(const ModelConfig& config) {
  auto take = [this](std::size_t n) {
    TensorSlot s{total_, n};
    total_ += n;
    return s;
  };
  for (std::size_t b = 0; b < config.branches.size(); ++b) {
    conv_w_.push_back(take(config.conv_filters * config.kernel_size));
    conv_b_.push_back(take(config.conv_filters));
  }
  std::size_t in = config.fused_dim();
  std::vector<std::size_t> outs = config.fcn_dims;
  outs.push_back(1);
  for (std::size_t out : outs) {
    dense_w_.push_back(take(out * in));
    dense_b_.push_back(take(out));
    dense_in_.push_back(in);
    dense_out_.push_back(out);
    in = out;
  }
}

FusionModel::FusionModel(ModelConfig config)
    : config_((config.validate(), std::move(config))),
      layout_(config_),
      params_(layout_.total(), 0.0) {}

Matrix conv1d(std::span<const double> input, std::span<const double> weights,
              std::span<const double> bias, std::size_t kernel_size, bool apply_relu) {
  if (kernel_size == 0 || weights.size() % kernel_size != 0 ||
      bias.size() != weights.size() / kernel_size) {
    throw Error(ErrorCode::kShapeMismatch, "conv weights/bias do not match the kernel size");
  }
  if (input.size() < kernel_size) {
    throw Error(ErrorCode::kInputTooShort, "input of length " + std::to_string(input.size()) +
                                               " is shorter than the kernel");
  }
  const std::size_t filters = bias.size();
  const std::size_t positions = input.size() - kernel_size + 1;
  Matrix out(filters, positions);
  for (std::size_t f = 0; f < filters; ++f) {
    for (std::size_t i = 0; i < positions; ++i) {
      double acc = bias[f];
      for (std::size_t k = 0; k < kernel_size; ++k) acc += weights[f * kernel_size + k] * input[i + k];
      out(f, i) = apply_relu ? relu(acc) : acc;
    }
  }
  return out;
}

std::vector<double> global_max_pool(const Matrix& map) {
  std::vector<double> out(map.rows());
  const auto idx = global_argmax(map);
  for (std::size_t f = 0; f < map.rows(); ++f) out[f] = map(f, idx[f]);
  return out;
}

std::vector<std::size_t> global_argmax(const Matrix& map) {
  if (map.rows() > 0 && map.cols() == 0) {
    throw Error(ErrorCode::kEmptyMatrix, "max-pool over zero positions");
  }
  std::vector<std::size_t> idx(map.rows(), 0);
  for (std::size_t f = 0; f < map.rows(); ++f) {
    const auto r = map.row(f);
    idx[f] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return idx;
}

std::vector<double> dropout(std::span<const double> v, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kBadProbability, "dropout probability " + std::to_string(p) +
                                                " outside [0, 1)");
  }
  std::vector<double> mask;
  draw_mask(mask, v.size(), p, mode, rng);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * mask[i];
  return out;
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyBatch, "mse of an empty batch");
  if (predictions.size() != targets.size()) {
    throw Error(ErrorCode::kShapeMismatch, "predictions and targets differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

double forward(const FusionModel& model, std::span<const FeatureVector> inputs, Mode mode,
               Rng& rng) {
  Trace tr;
  run_forward(model, inputs, mode, rng, tr);
  return tr.prediction;
}

double predict(const FusionModel& model, std::span<const FeatureVector> inputs) {
  Rng unused(0);
  return forward(model, inputs, Mode::kInfer, unused);
}

LossAndGradients loss_and_gradients(const FusionModel& model, std::span<const Example> data,
                                    std::span<const std::size_t> indices, Mode mode, Rng& rng) {
  if (indices.empty()) throw Error(ErrorCode::kEmptyBatch, "empty batch");
  LossAndGradients out;
  out.gradients.assign(model.parameters().size(), 0.0);
  const double n = static_cast<double>(indices.size());
  Trace tr;
  for (std::size_t idx : indices) {
    const Example& ex = data[idx];
    run_forward(model, ex.inputs, mode, rng, tr);
    const double residual = tr.prediction - ex.target;
    out.loss += residual * residual;
    backward(model, ex.inputs, tr, 2.0 * residual / n, out.gradients);
  }
  out.loss /= n;
  return out;
}

LossAndGradients loss_and_gradients(const FusionModel& model, std::span<const Example> batch,
                                    Mode mode, Rng& rng) {
  std::vector<std::size_t> indices(batch.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  return loss_and_gradients(model, batch, indices, mode, rng);
}

AdamState::AdamState(std::size_t parameter_count, AdamOptions options)
    : options_(options), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamState::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "Adam state holds " + std::to_string(m_.size()) +
                                               " moments, got " + std::to_string(params.size()) +
                                               " params and " + std::to_string(grads.size()) +
                                               " gradients");
  }
  ++t_;
  const auto& o = options_;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = o.beta1 * m_[i] + (1.0 - o.beta1) * g;
    v_[i] = o.beta2 * v_[i] + (1.0 - o.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
}

FusionModel init_model(const ModelConfig& config) {
  FusionModel model(config);
  const ParameterLayout& layout = model.layout();
  Rng rng(config.seed);
  auto fill = [&](TensorSlot slot, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : model.tensor(slot)) w = (2.0 * uniform01(rng) - 1.0) * bound;
  };
  for (std::size_t b = 0; b < config.branches.size(); ++b) {
    fill(layout.conv_weights(b), config.kernel_size);
  }
  for (std::size_t l = 0; l < layout.dense_layers(); ++l) {
    fill(layout.dense_weights(l), layout.dense_in(l));
  }
  return model;
}

std::vector<std::uint8_t> save_weights(const FusionModel& model) {
  const std::string cfg = model.config().to_json();
  std::vector<std::uint8_t> out;
  out.reserve(10 + cfg.size() + 8 * model.parameters().size());
  append_bytes(out, "CFWT");
  append_le<std::uint16_t>(out, kWeightsVersion);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  append_bytes(out, cfg);
  for (double p : model.parameters()) append_le<double>(out, p);
  return out;
}

FusionModel load_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CFWT", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a CFWT weight file");
  }
  if (bytes.size() < 6) throw Error(ErrorCode::kTruncated, "missing version");
  const auto version = read_le<std::uint16_t>(bytes, 4);
  if (version != kWeightsVersion) {
    throw Error(ErrorCode::kBadVersion, "unsupported CFWT version " + std::to_string(version));
  }
  if (bytes.size() < 10) throw Error(ErrorCode::kTruncated, "missing config length");
  const std::size_t cfg_len = read_le<std::uint32_t>(bytes, 6);
  if (bytes.size() - 10 < cfg_len) throw Error(ErrorCode::kTruncated, "config cut short");

  ModelConfig config;
  try {
    config = ModelConfig::from_json(
        std::string_view(reinterpret_cast<const char*>(bytes.data() + 10), cfg_len));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigMismatch, e.what());
  }
  FusionModel model(std::move(config));
  auto params = model.parameters();
  const std::size_t offset = 10 + cfg_len;
  const std::size_t need = 8 * params.size();
  const std::size_t have = bytes.size() - offset;
  if (have < need) {
    throw Error(ErrorCode::kTruncated, "parameter block holds " + std::to_string(have) +
                                           " bytes, config needs " + std::to_string(need));
  }
  if (have > need) {
    throw Error(ErrorCode::kConfigMismatch, std::to_string(have - need) +
                                                " bytes beyond the parameters the config declares");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = read_le<double>(bytes, offset + 8 * i);
    if (!std::isfinite(params[i])) throw Error(ErrorCode::kNonFinite, "non-finite parameter");
  }
  return model;
}

}  // namespace comfeat
