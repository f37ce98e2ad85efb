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

#ifndef COMFEAT_SERVICE_HPP_
#define COMFEAT_SERVICE_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comfeat/features.hpp"
#include "comfeat/neuralnet.hpp"
#include "comfeat/pipeline.hpp"
#include "comfeat/spectral.hpp"

namespace httplib {
class Server;
}

namespace comfeat {

// key = value text, one pair per line. '#' starts a comment, blank lines are
// ignored, whitespace around keys and values is trimmed. A repeated key takes
// the last value. Throws kBadConfig on a line without '=' or with an empty key.
std::map<std::string, std::string> parse_key_value(std::string_view text);

// Recognized keys: frame_len, hop, n_fft, n_filters, n_coeffs,
// scale (mel|linear), log_floor. Unknown keys are kBadConfig.
SpectralConfig parse_spectral_config(std::string_view text);

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string model_path;
  std::string spectral_config_path;
  std::size_t max_upload_bytes = 50u << 20;
  std::string cors_origin = "*";
};

// Keys: host, port, model_path, spectral_config, max_upload_bytes,
// cors_origin. COMFEAT_MODEL in the environment overrides model_path.
ServiceConfig parse_service_config(std::string_view text);
void apply_environment(ServiceConfig& config);

// Immutable model plus the metadata served alongside predictions.
struct ModelBundle {
  FusionModel model;
  std::string digest;   // sha256 of the weight file, hex
  std::string version;  // "cfwt<version>-<first 12 hex digits of digest>"

  std::vector<FeatureSource> feature_set() const;
  std::string info_json() const;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);
ModelBundle make_bundle(std::span<const std::uint8_t> weight_bytes);
ModelBundle make_bundle(FusionModel model);

struct Prediction {
  double raw_score = 0.0;
  double display_score = 0.0;
  SeverityBand band = SeverityBand::kMinimal;
  std::vector<FeatureSource> feature_set;
  std::string model_version;
  double processing_ms = 0.0;

  std::string to_json(bool include_timing = true) const;
};

// The serving pipeline: decode, mono, resample to 16 kHz, assemble features in
// the model's branch order (spectral from audio, neural from the embedding
// files whose header source matches the branch), infer, band.
// Throws the underlying comfeat::Error on any failure.
Prediction predict_clip(const ModelBundle& bundle, std::span<const std::uint8_t> wav,
                        std::span<const std::vector<std::uint8_t>> embeddings,
                        const SpectralConfig& spectral_cfg);

struct UploadPart {
  std::string name;
  std::string filename;
  std::string content_type;
  std::string content;
};

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// Transport-independent request handlers over a shared read-only model.
class PredictionService {
 public:
  explicit PredictionService(ServiceConfig config, SpectralConfig spectral = {});

  void set_model(std::shared_ptr<const ModelBundle> bundle);
  std::shared_ptr<const ModelBundle> model() const;
  const ServiceConfig& config() const { return config_; }

  // multipart fields: "audio" (WAV, required), "embedding" (CFEM, repeatable).
  HttpReply handle_predict(std::span<const UploadPart> parts) const;
  HttpReply handle_health() const;
  HttpReply handle_model_info() const;

 private:
  ServiceConfig config_;
  SpectralConfig spectral_;
  mutable std::mutex mu_;
  std::shared_ptr<const ModelBundle> model_;
};

// HTTP binding of PredictionService:
//   POST /api/v1/predict   GET /api/v1/health   GET /api/v1/model
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<PredictionService> service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds host:port (port 0 picks a free port) and returns the bound port.
  // Throws kIo when binding fails.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop(). Returns at once if stop() came first.
  void run();
  // Safe from any thread, before, during or after run().
  void stop();
  void wait_until_ready() const;

 private:
  std::shared_ptr<PredictionService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex run_mu_;
  bool stop_requested_ = false;
  std::atomic<bool> in_run_{false};
};

}  // namespace comfeat

#endif  // COMFEAT_SERVICE_HPP_
