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

#include "comfeat/service.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "byte_io.hpp"
#include "comfeat/audio_io.hpp"
#include "comfeat/embeddings.hpp"
#include "comfeat/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace comfeat {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size()) {
    throw Error(ErrorCode::kBadConfig, key + ": '" + value + "' is not a valid number");
  }
  return out;
}

ordered_json source_list(std::span<const FeatureSource> sources) {
  ordered_json arr = ordered_json::array();
  for (auto s : sources) arr.push_back(std::string(to_string(s)));
  return arr;
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFile:
    case ErrorCode::kBadMagic:
    case ErrorCode::kBadVersion:
    case ErrorCode::kTruncated:
    case ErrorCode::kNonFinite:
      return 400;
    case ErrorCode::kTooLong:
      return 413;
    case ErrorCode::kUnsupportedFormat:
      return 415;
    case ErrorCode::kMissingArtifact:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kBranchMismatch:
    case ErrorCode::kTooShort:
      return 422;
    default:
      return 500;
  }
}

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
  ordered_json j;
  j["error"] = std::string(code);
  j["message"] = std::string(message);
  return {status, j.dump()};
}

}  // namespace

std::map<std::string, std::string> parse_key_value(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kBadConfig, "line " + std::to_string(line_no) + ": missing '='");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorCode::kBadConfig, "line " + std::to_string(line_no) + ": empty key");
    out[key] = std::move(value);
  }
  return out;
}

SpectralConfig parse_spectral_config(std::string_view text) {
  SpectralConfig cfg;
  for (const auto& [key, value] : parse_key_value(text)) {
    if (key == "frame_len") {
      cfg.frame_len = parse_number<std::size_t>(key, value);
    } else if (key == "hop") {
      cfg.hop = parse_number<std::size_t>(key, value);
    } else if (key == "n_fft") {
      cfg.n_fft = parse_number<std::size_t>(key, value);
    } else if (key == "n_filters") {
      cfg.n_filters = parse_number<std::size_t>(key, value);
    } else if (key == "n_coeffs") {
      cfg.n_coeffs = parse_number<std::size_t>(key, value);
    } else if (key == "log_floor") {
      cfg.log_floor = parse_number<double>(key, value);
    } else if (key == "scale") {
      if (value == "mel") {
        cfg.scale = FrequencyScale::kMel;
      } else if (value == "linear") {
        cfg.scale = FrequencyScale::kLinear;
      } else {
        throw Error(ErrorCode::kBadConfig, "scale must be mel or linear");
      }
    } else {
      throw Error(ErrorCode::kBadConfig, "unknown spectral key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ServiceConfig parse_service_config(std::string_view text) {
  ServiceConfig cfg;
  for (const auto& [key, value] : parse_key_value(text)) {
    if (key == "host") {
      cfg.host = value;
    } else if (key == "port") {
      cfg.port = parse_number<int>(key, value);
      if (cfg.port < 0 || cfg.port > 65535) throw Error(ErrorCode::kBadConfig, "port out of range");
    } else if (key == "model_path") {
      cfg.model_path = value;
    } else if (key == "spectral_config") {
      cfg.spectral_config_path = value;
    } else if (key == "max_upload_bytes") {
      cfg.max_upload_bytes = parse_number<std::size_t>(key, value);
    } else if (key == "cors_origin") {
      cfg.cors_origin = value;
    } else {
      throw Error(ErrorCode::kBadConfig, "unknown service key '" + key + "'");
    }
  }
  return cfg;
}

void apply_environment(ServiceConfig& config) {
  if (const char* model = std::getenv("COMFEAT_MODEL"); model && *model) {
    config.model_path = model;
  }
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

ModelBundle make_bundle(std::span<const std::uint8_t> weight_bytes) {
  ModelBundle b{load_weights(weight_bytes), sha256_hex(weight_bytes), {}};
  b.version = "cfwt" + std::to_string(kWeightsVersion) + "-" + b.digest.substr(0, 12);
  return b;
}

ModelBundle make_bundle(FusionModel model) {
  const auto bytes = save_weights(model);
  ModelBundle b{std::move(model), sha256_hex(bytes), {}};
  b.version = "cfwt" + std::to_string(kWeightsVersion) + "-" + b.digest.substr(0, 12);
  return b;
}

std::vector<FeatureSource> ModelBundle::feature_set() const {
  std::vector<FeatureSource> out;
  for (const Branch& b : model.config().branches) out.push_back(b.source);
  return out;
}

std::string ModelBundle::info_json() const {
  const ModelConfig& cfg = model.config();
  ordered_json j;
  j["feature_set"] = source_list(feature_set());
  j["dims"] = ordered_json::array();
  for (const Branch& b : cfg.branches) j["dims"].push_back(b.input_dim);
  j["conv_filters"] = cfg.conv_filters;
  j["kernel_size"] = cfg.kernel_size;
  j["fcn_dims"] = cfg.fcn_dims;
  j["parameter_count"] = model.parameters().size();
  j["version"] = version;
  j["digest"] = digest;
  return j.dump();
}

std::string Prediction::to_json(bool include_timing) const {
  ordered_json j;
  j["raw_score"] = raw_score;
  j["display_score"] = display_score;
  j["band"] = std::string(to_string(band));
  j["feature_set"] = source_list(feature_set);
  j["model_version"] = model_version;
  if (include_timing) j["processing_ms"] = processing_ms;
  return j.dump();
}

Prediction predict_clip(const ModelBundle& bundle, std::span<const std::uint8_t> wav,
                        std::span<const std::vector<std::uint8_t>> embeddings,
                        const SpectralConfig& spectral_cfg) {
  const auto started = std::chrono::steady_clock::now();
  const AudioClip clip = prepare_for_model(decode_wav(wav));

  const ModelConfig& cfg = bundle.model.config();
  std::vector<FeatureVector> inputs;
  inputs.reserve(cfg.branches.size());
  for (const Branch& branch : cfg.branches) {
    FeatureVector v;
    if (is_spectral(branch.source)) {
      v = spectral_vector(clip, branch.source, spectral_cfg);
    } else {
      const std::vector<std::uint8_t>* match = nullptr;
      for (const auto& e : embeddings) {
        if (read_embedding_header(e).source == branch.source) {
          match = &e;
          break;
        }
      }
      if (!match) {
        throw Error(ErrorCode::kMissingArtifact,
                    "model needs a " + std::string(to_string(branch.source)) + " embedding part");
      }
      v = load_embedding(*match, branch.source);
    }
    if (v.dim() != branch.input_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(to_string(branch.source)) + " vector has " + std::to_string(v.dim()) +
                      " values, model expects " + std::to_string(branch.input_dim));
    }
    inputs.push_back(std::move(v));
  }

  Prediction p;
  p.raw_score = predict(bundle.model, inputs);
  const Severity s = severity_band(p.raw_score);
  p.display_score = s.display_score;
  p.band = s.band;
  p.feature_set = bundle.feature_set();
  p.model_version = bundle.version;
  p.processing_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return p;
}

PredictionService::PredictionService(ServiceConfig config, SpectralConfig spectral)
    : config_(std::move(config)), spectral_(spectral) {
  spectral_.validate();
}

void PredictionService::set_model(std::shared_ptr<const ModelBundle> bundle) {
  std::lock_guard lock(mu_);
  model_ = std::move(bundle);
}

std::shared_ptr<const ModelBundle> PredictionService::model() const {
  std::lock_guard lock(mu_);
  return model_;
}

HttpReply PredictionService::handle_predict(std::span<const UploadPart> parts) const {
  const auto bundle = model();
  if (!bundle) return error_reply(503, "ModelNotLoaded", "model not loaded");

  std::size_t total = 0;
  for (const auto& p : parts) total += p.content.size();
  if (total > config_.max_upload_bytes) {
    return error_reply(413, "PayloadTooLarge", "upload exceeds " +
                                                   std::to_string(config_.max_upload_bytes) +
                                                   " bytes");
  }
  const UploadPart* audio = nullptr;
  std::vector<std::vector<std::uint8_t>> embeddings;
  for (const auto& p : parts) {
    if (p.name == "audio" && !audio) {
      audio = &p;
    } else if (p.name == "embedding") {
      const auto bytes = detail::as_bytes(p.content);
      embeddings.emplace_back(bytes.begin(), bytes.end());
    }
  }
  if (!audio) return error_reply(400, "MissingAudio", "multipart field 'audio' is required");

  try {
    const auto p = predict_clip(*bundle, detail::as_bytes(audio->content), embeddings, spectral_);
    return {200, p.to_json()};
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "Internal", e.what());
  }
}

HttpReply PredictionService::handle_health() const {
  ordered_json j;
  j["status"] = "ok";
  j["model_loaded"] = model() != nullptr;
  return {200, j.dump()};
}

HttpReply PredictionService::handle_model_info() const {
  const auto bundle = model();
  if (!bundle) return error_reply(503, "ModelNotLoaded", "model not loaded");
  return {200, bundle->info_json()};
}

HttpServer::HttpServer(std::shared_ptr<PredictionService> service)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  const std::string origin = service_->config().cors_origin;
  auto send = [origin](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
    if (!origin.empty()) res.set_header("Access-Control-Allow-Origin", origin);
  };

  server_->set_payload_max_length(service_->config().max_upload_bytes);

  server_->Post("/api/v1/predict", [this, send](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      send(res, error_reply(400, "BadRequest", "expected multipart/form-data"));
      return;
    }
    std::vector<UploadPart> parts;
    for (const auto& [name, file] : req.files) {
      parts.push_back({file.name, file.filename, file.content_type, file.content});
    }
    send(res, service_->handle_predict(parts));
  });
  server_->Get("/api/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_->handle_health());
  });
  server_->Get("/api/v1/model", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_->handle_model_info());
  });
  server_->Options(R"(/api/v1/.*)", [origin](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    if (!origin.empty()) res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  // Statuses produced by httplib itself (413, 400 on unparsable multipart,
  // 404) get a JSON body like every other reply.
  server_->set_error_handler([send](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const char* code = res.status == 413 ? "PayloadTooLarge"
                       : res.status == 404 ? "NotFound"
                                           : "BadRequest";
    send(res, error_reply(res.status, code, httplib::status_message(res.status)));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::run() {
  {
    std::lock_guard lock(run_mu_);
    if (stop_requested_) return;
    in_run_ = true;
  }
  server_->listen_after_bind();
  in_run_ = false;
}

void HttpServer::stop() {
  {
    std::lock_guard lock(run_mu_);
    stop_requested_ = true;
  }
  // run() may be between its flag and the listen loop; wait until the server
  // is actually listening (or run() has returned) before shutting it down.
  while (in_run_ && !server_->is_running()) std::this_thread::yield();
  server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace comfeat
