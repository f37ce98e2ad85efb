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

#include "comfeat/comfeat.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <thread>

#include "byte_io.hpp"
#include "comfeat/audio_io.hpp"
#include "comfeat/embeddings.hpp"
#include "comfeat/error.hpp"
#include "comfeat/pipeline.hpp"
#include "comfeat/service.hpp"
#include "comfeat/spectral.hpp"
#include "json.hpp"

struct comfeat_model {
  std::shared_ptr<const comfeat::ModelBundle> bundle;
};

struct comfeat_server {
  comfeat::ServiceConfig config;
  std::shared_ptr<comfeat::PredictionService> service;
  std::unique_ptr<comfeat::HttpServer> http;
  bool bound = false;
  std::thread loader;
};

namespace {

using comfeat::Error;
using comfeat::ErrorCode;
using json = nlohmann::json;

thread_local std::string g_last_error;

comfeat_status fail(comfeat_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs body, translating exceptions into status codes and the thread's last
// error message.
template <typename Fn>
comfeat_status guarded(Fn&& body) {
  try {
    body();
    g_last_error.clear();
    return COMFEAT_OK;
  } catch (const Error& e) {
    return fail(static_cast<comfeat_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(COMFEAT_ERR_BAD_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(COMFEAT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(COMFEAT_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

comfeat::SpectralConfig spectral_from(const char* text) {
  return text ? comfeat::parse_spectral_config(text) : comfeat::SpectralConfig{};
}

comfeat::FeatureSource source_named(const std::string& name) {
  const auto s = comfeat::parse_feature_source(name);
  if (!s) throw Error(ErrorCode::kBadConfig, "unknown feature source '" + name + "'");
  return *s;
}

comfeat::TrainConfig train_config_from(const char* text) {
  static const std::set<std::string> kKeys{
      "feature_set", "epochs",     "batch_size",          "lr",           "dropout_p",
      "seed",        "train_ratio", "dev_ratio",          "early_stop_patience",
      "conv_filters", "kernel_size", "fcn_dims"};
  comfeat::TrainConfig cfg;
  try {
    const json j = json::parse(text ? text : "{}");
    for (const auto& [key, value] : j.items()) {
      if (!kKeys.contains(key)) throw Error(ErrorCode::kBadConfig, "unknown train key '" + key + "'");
    }
    for (const auto& name : j.at("feature_set")) cfg.feature_set.push_back(source_named(name));
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.dropout_p = j.value("dropout_p", cfg.dropout_p);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.train_ratio = j.value("train_ratio", cfg.train_ratio);
    cfg.dev_ratio = j.value("dev_ratio", cfg.dev_ratio);
    cfg.early_stop_patience = j.value("early_stop_patience", cfg.early_stop_patience);
    cfg.conv_filters = j.value("conv_filters", cfg.conv_filters);
    cfg.kernel_size = j.value("kernel_size", cfg.kernel_size);
    cfg.fcn_dims = j.value("fcn_dims", cfg.fcn_dims);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBadConfig, std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void load_model_async(comfeat_server* server) {
  const std::string path = server->config.model_path;
  if (path.empty()) return;
  auto service = server->service;
  server->loader = std::thread([service, path] {
    try {
      const auto bytes = comfeat::detail::read_file(path);
      service->set_model(
          std::make_shared<const comfeat::ModelBundle>(comfeat::make_bundle(bytes)));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "comfeat: failed to load model %s: %s\n", path.c_str(), e.what());
    }
  });
}

}  // namespace

extern "C" {

const char* comfeat_version(void) { return "1.0.0"; }

const char* comfeat_status_name(comfeat_status status) {
  if (status == COMFEAT_OK) return "Ok";
  if (status == COMFEAT_ERR_INTERNAL) return "Internal";
  static thread_local std::string name;
  name = std::string(comfeat::error_code_name(static_cast<ErrorCode>(status)));
  return name.c_str();
}

const char* comfeat_last_error(void) { return g_last_error.c_str(); }

void comfeat_string_free(char* s) { std::free(s); }
void comfeat_bytes_free(uint8_t* bytes) { std::free(bytes); }

comfeat_status comfeat_model_load(const char* path, comfeat_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    const auto bytes = comfeat::detail::read_file(path);
    *out = new comfeat_model{
        std::make_shared<const comfeat::ModelBundle>(comfeat::make_bundle(bytes))};
  });
}

comfeat_status comfeat_model_load_bytes(const uint8_t* data, size_t size, comfeat_model** out) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    *out = new comfeat_model{std::make_shared<const comfeat::ModelBundle>(
        comfeat::make_bundle(std::span<const uint8_t>(data, size)))};
  });
}

comfeat_status comfeat_model_init(const char* config_json, comfeat_model** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    auto model = comfeat::init_model(comfeat::ModelConfig::from_json(config_json));
    *out = new comfeat_model{
        std::make_shared<const comfeat::ModelBundle>(comfeat::make_bundle(std::move(model)))};
  });
}

comfeat_status comfeat_model_save(const comfeat_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    comfeat::detail::write_file(path, comfeat::save_weights(model->bundle->model));
  });
}

comfeat_status comfeat_model_info(const comfeat_model* model, char** out_json) {
  return guarded([&] {
    require(model, "model");
    require(out_json, "out_json");
    *out_json = dup_string(model->bundle->info_json());
  });
}

void comfeat_model_free(comfeat_model* model) { delete model; }

comfeat_status comfeat_train(const char* manifest_path, const char* train_config_json,
                             const char* spectral_config, comfeat_epoch_callback on_epoch,
                             void* user_data, comfeat_model** out_model) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(out_model, "out_model");
    const auto config = train_config_from(train_config_json);
    const auto spectral = spectral_from(spectral_config);
    const auto text = comfeat::detail::read_file(manifest_path);
    const auto entries =
        comfeat::load_manifest(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    const auto base = std::filesystem::path(manifest_path).parent_path();
    comfeat::EpochCallback cb;
    if (on_epoch) {
      cb = [on_epoch, user_data](const comfeat::EpochLog& log) {
        on_epoch(log.to_json().c_str(), user_data);
      };
    }
    auto result = comfeat::train(entries, base, config, spectral, cb);
    *out_model = new comfeat_model{
        std::make_shared<const comfeat::ModelBundle>(comfeat::make_bundle(std::move(result.model)))};
  });
}

comfeat_status comfeat_evaluate(const comfeat_model* model, const char* manifest_path,
                                const char* spectral_config, char** out_json) {
  return guarded([&] {
    require(model, "model");
    require(manifest_path, "manifest_path");
    require(out_json, "out_json");
    const auto text = comfeat::detail::read_file(manifest_path);
    const auto entries =
        comfeat::load_manifest(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    const auto base = std::filesystem::path(manifest_path).parent_path();
    auto report = comfeat::evaluate(model->bundle->model, entries, base, spectral_from(spectral_config));
    report.model_version = model->bundle->version;
    *out_json = dup_string(report.to_json());
  });
}

comfeat_status comfeat_predict(const comfeat_model* model, const uint8_t* wav, size_t wav_size,
                               const comfeat_buffer* embeddings, size_t n_embeddings,
                               const char* spectral_config, char** out_json) {
  return guarded([&] {
    require(model, "model");
    require(wav, "wav");
    require(out_json, "out_json");
    if (n_embeddings > 0) require(embeddings, "embeddings");
    std::vector<std::vector<uint8_t>> parts;
    for (size_t i = 0; i < n_embeddings; ++i) {
      require(embeddings[i].data, "embedding data");
      parts.emplace_back(embeddings[i].data, embeddings[i].data + embeddings[i].size);
    }
    const auto p = comfeat::predict_clip(*model->bundle, std::span<const uint8_t>(wav, wav_size),
                                         parts, spectral_from(spectral_config));
    *out_json = dup_string(p.to_json());
  });
}

comfeat_status comfeat_extract(const char* wav_path, const char* feature,
                               const char* spectral_config, int pooled, uint8_t** out_bytes,
                               size_t* out_size) {
  return guarded([&] {
    require(wav_path, "wav_path");
    require(feature, "feature");
    require(out_bytes, "out_bytes");
    require(out_size, "out_size");
    const auto source = source_named(feature);
    if (!comfeat::is_spectral(source)) {
      throw Error(ErrorCode::kInvalidArgument, "only mfcc and lfcc are extracted in-process");
    }
    auto cfg = spectral_from(spectral_config);
    cfg.scale = source == comfeat::FeatureSource::kMfcc ? comfeat::FrequencyScale::kMel
                                                        : comfeat::FrequencyScale::kLinear;
    const auto clip = comfeat::prepare_for_model(comfeat::decode_wav(comfeat::detail::read_file(wav_path)));
    const auto frames = comfeat::cepstral_features(clip, cfg);
    std::vector<uint8_t> bytes;
    if (pooled) {
      auto v = comfeat::temporal_mean_pool(frames, comfeat::FeatureSource::kOther);
      bytes = comfeat::store_embedding(v);
    } else {
      bytes = comfeat::store_embedding(frames, comfeat::FeatureSource::kOther);
    }
    auto* buf = static_cast<uint8_t*>(std::malloc(bytes.size()));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, bytes.data(), bytes.size());
    *out_bytes = buf;
    *out_size = bytes.size();
  });
}

comfeat_status comfeat_server_create(const char* service_config, comfeat_server** out) {
  return guarded([&] {
    require(out, "out");
    auto server = std::make_unique<comfeat_server>();
    server->config = comfeat::parse_service_config(service_config ? service_config : "");
    comfeat::apply_environment(server->config);
    comfeat::SpectralConfig spectral;
    if (!server->config.spectral_config_path.empty()) {
      const auto text = comfeat::detail::read_file(server->config.spectral_config_path);
      spectral = comfeat::parse_spectral_config(
          std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    }
    server->service = std::make_shared<comfeat::PredictionService>(server->config, spectral);
    server->http = std::make_unique<comfeat::HttpServer>(server->service);
    *out = server.release();
  });
}

comfeat_status comfeat_server_bind(comfeat_server* server, int* out_port) {
  return guarded([&] {
    require(server, "server");
    const int port = server->http->bind(server->config.host, server->config.port);
    server->bound = true;
    if (out_port) *out_port = port;
  });
}

comfeat_status comfeat_server_run(comfeat_server* server) {
  return guarded([&] {
    require(server, "server");
    if (!server->bound) {
      server->http->bind(server->config.host, server->config.port);
      server->bound = true;
    }
    load_model_async(server);
    server->http->run();
    if (server->loader.joinable()) server->loader.join();
  });
}

void comfeat_server_stop(comfeat_server* server) {
  if (server) server->http->stop();
}

void comfeat_server_free(comfeat_server* server) {
  if (!server) return;
  server->http->stop();
  if (server->loader.joinable()) server->loader.join();
  delete server;
}

}  // extern "C"
