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

// comfeat command-line front end. Links only the C API.
//
//   comfeat extract --audio a.wav --feature mfcc --out a.cfem [--pooled]
//   comfeat extract --manifest m.csv --feature lfcc --out-dir feats/
//   comfeat train   --manifest m.csv --features trillsson,mfcc --out m.cfwt [--log log.jsonl]
//   comfeat eval    --model m.cfwt --manifest test.csv
//   comfeat predict --model m.cfwt --audio a.wav [--embedding e.cfem]...
//   comfeat serve   --config service.conf [--host H] [--port P] [--model m.cfwt]
//
// Exit status: 0 success, 1 runtime error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "comfeat/comfeat.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(comfeat_status status, const std::string& what) {
  if (status != COMFEAT_OK) {
    throw RuntimeError(what + ": " + comfeat_last_error());
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<uint8_t> read_bytes(const std::string& path) {
  const std::string s = read_text(path);
  return {s.begin(), s.end()};
}

void write_bytes(const std::string& path, const uint8_t* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot create " + path);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw RuntimeError("write failed: " + path);
}

struct ModelHandle {
  comfeat_model* p = nullptr;
  ~ModelHandle() { comfeat_model_free(p); }
};

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { comfeat_string_free(p); }
};

std::optional<std::string> spectral_text(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_text(path);
}

const char* c_str_or_null(const std::optional<std::string>& s) { return s ? s->c_str() : nullptr; }

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::string audio, manifest, feature = "mfcc", out, out_dir, spectral_config;
  bool pooled = false;
};

void extract_one(const std::string& wav, const ExtractArgs& a, const std::string& dest,
                 const std::optional<std::string>& spectral) {
  uint8_t* bytes = nullptr;
  size_t size = 0;
  check(comfeat_extract(wav.c_str(), a.feature.c_str(), c_str_or_null(spectral), a.pooled ? 1 : 0,
                        &bytes, &size),
        "extract " + wav);
  std::unique_ptr<uint8_t, decltype(&comfeat_bytes_free)> guard(bytes, &comfeat_bytes_free);
  write_bytes(dest, bytes, size);
}

int run_extract(const ExtractArgs& a) {
  const auto spectral = spectral_text(a.spectral_config);
  if (!a.audio.empty()) {
    extract_one(a.audio, a, a.out, spectral);
    return kExitOk;
  }
  // Manifest mode: one file per entry with audio, named <id>.<feature>.cfem.
  const auto base = std::filesystem::path(a.manifest).parent_path();
  std::filesystem::create_directories(a.out_dir);
  std::istringstream lines(read_text(a.manifest));
  std::string line;
  std::getline(lines, line);  // header
  std::size_t written = 0;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (cells.size() < 2 || cells[1].empty()) continue;
    std::filesystem::path wav(cells[1]);
    if (wav.is_relative()) wav = base / wav;
    const auto dest = std::filesystem::path(a.out_dir) / (cells[0] + "." + a.feature + ".cfem");
    extract_one(wav.string(), a, dest.string(), spectral);
    ++written;
  }
  std::cerr << "wrote " << written << " feature files to " << a.out_dir << "\n";
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string manifest, out, log, spectral_config;
  std::vector<std::string> features;
  std::size_t epochs = 100, batch_size = 16, patience = 10, conv_filters = 32, kernel_size = 3;
  double lr = 1e-3, dropout = 0.2, train_ratio = 0.8, dev_ratio = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fcn_dims{256, 90};
};

void on_epoch(const char* line, void* user) {
  auto* log = static_cast<std::ofstream*>(user);
  if (log->is_open()) *log << line << "\n" << std::flush;
  std::cerr << line << "\n";
}

int run_train(const TrainArgs& a) {
  nlohmann::json cfg;
  cfg["feature_set"] = a.features;
  cfg["epochs"] = a.epochs;
  cfg["batch_size"] = a.batch_size;
  cfg["lr"] = a.lr;
  cfg["dropout_p"] = a.dropout;
  cfg["seed"] = a.seed;
  cfg["train_ratio"] = a.train_ratio;
  cfg["dev_ratio"] = a.dev_ratio;
  cfg["early_stop_patience"] = a.patience;
  cfg["conv_filters"] = a.conv_filters;
  cfg["kernel_size"] = a.kernel_size;
  cfg["fcn_dims"] = a.fcn_dims;

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log, std::ios::trunc);
    if (!log) throw RuntimeError("cannot create " + a.log);
  }
  const auto spectral = spectral_text(a.spectral_config);
  ModelHandle model;
  check(comfeat_train(a.manifest.c_str(), cfg.dump().c_str(), c_str_or_null(spectral), on_epoch,
                      &log, &model.p),
        "train");
  check(comfeat_model_save(model.p, a.out.c_str()), "save " + a.out);
  return kExitOk;
}

// ---- eval / predict --------------------------------------------------------

int run_eval(const std::string& model_path, const std::string& manifest,
             const std::string& spectral_path) {
  const auto spectral = spectral_text(spectral_path);
  ModelHandle model;
  check(comfeat_model_load(model_path.c_str(), &model.p), "load " + model_path);
  OwnedString report;
  check(comfeat_evaluate(model.p, manifest.c_str(), c_str_or_null(spectral), &report.p), "eval");
  std::cout << report.p << "\n";
  return kExitOk;
}

int run_predict(const std::string& model_path, const std::string& audio,
                const std::vector<std::string>& embedding_paths, const std::string& spectral_path) {
  const auto spectral = spectral_text(spectral_path);
  ModelHandle model;
  check(comfeat_model_load(model_path.c_str(), &model.p), "load " + model_path);
  const auto wav = read_bytes(audio);
  std::vector<std::vector<uint8_t>> files;
  std::vector<comfeat_buffer> buffers;
  for (const auto& p : embedding_paths) files.push_back(read_bytes(p));
  for (const auto& f : files) buffers.push_back({f.data(), f.size()});
  OwnedString out;
  check(comfeat_predict(model.p, wav.data(), wav.size(), buffers.data(), buffers.size(),
                        c_str_or_null(spectral), &out.p),
        "predict");
  std::cout << out.p << "\n";
  return kExitOk;
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string config, host, model;
  int port = -1;
};

int run_serve(const ServeArgs& a) {
  std::string text = a.config.empty() ? std::string() : read_text(a.config);
  // Later keys override earlier ones, so flags are appended.
  if (!a.host.empty()) text += "\nhost = " + a.host;
  if (a.port >= 0) text += "\nport = " + std::to_string(a.port);
  if (!a.model.empty()) text += "\nmodel_path = " + a.model;

  // Route SIGINT/SIGTERM to a waiter thread that stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  comfeat_server* server = nullptr;
  check(comfeat_server_create(text.c_str(), &server), "serve");
  std::unique_ptr<comfeat_server, decltype(&comfeat_server_free)> guard(server, &comfeat_server_free);
  int port = 0;
  check(comfeat_server_bind(server, &port), "bind");
  std::cerr << "listening on port " << port << "\n";

  std::thread waiter([server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    comfeat_server_stop(server);
  });
  const comfeat_status status = comfeat_server_run(server);
  // The waiter may still be blocked if the server stopped on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  check(status, "serve");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comfeat: speech depression-severity regression toolkit"};
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Compute MFCC/LFCC features into CFEM files");
  auto* ex_audio = extract->add_option("--audio", ex.audio, "Input WAV file");
  auto* ex_manifest = extract->add_option("--manifest", ex.manifest, "Manifest CSV (batch mode)");
  ex_audio->excludes(ex_manifest);
  extract->add_option("--feature", ex.feature, "mfcc or lfcc")
      ->check(CLI::IsMember({"mfcc", "lfcc"}));
  extract->add_option("--out", ex.out, "Output CFEM file (with --audio)")->needs(ex_audio);
  extract->add_option("--out-dir", ex.out_dir, "Output directory (with --manifest)")
      ->needs(ex_manifest);
  extract->add_flag("--pooled", ex.pooled, "Store the time-mean vector instead of frames");
  extract->add_option("--spectral-config", ex.spectral_config, "key=value spectral settings");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a fusion model from a manifest");
  train->add_option("--manifest", tr.manifest)->required();
  train->add_option("--features", tr.features, "Feature sources in branch order")
      ->delimiter(',')
      ->required();
  train->add_option("--out", tr.out, "Output CFWT weight file")->required();
  train->add_option("--log", tr.log, "JSON-lines training log");
  train->add_option("--epochs", tr.epochs);
  train->add_option("--batch-size", tr.batch_size);
  train->add_option("--lr", tr.lr);
  train->add_option("--dropout", tr.dropout);
  train->add_option("--seed", tr.seed);
  train->add_option("--train-ratio", tr.train_ratio);
  train->add_option("--dev-ratio", tr.dev_ratio);
  train->add_option("--patience", tr.patience, "Early-stopping patience in epochs; 0 disables");
  train->add_option("--conv-filters", tr.conv_filters);
  train->add_option("--kernel-size", tr.kernel_size);
  train->add_option("--fcn-dims", tr.fcn_dims)->delimiter(',');
  train->add_option("--spectral-config", tr.spectral_config);

  std::string ev_model, ev_manifest, ev_spectral;
  auto* eval = app.add_subcommand("eval", "Report MAE/RMSE of a model on a manifest");
  eval->add_option("--model", ev_model)->required();
  eval->add_option("--manifest", ev_manifest)->required();
  eval->add_option("--spectral-config", ev_spectral);

  std::string pr_model, pr_audio, pr_spectral;
  std::vector<std::string> pr_embeddings;
  auto* predict = app.add_subcommand("predict", "Predict severity for one recording");
  predict->add_option("--model", pr_model)->required();
  predict->add_option("--audio", pr_audio)->required();
  predict->add_option("--embedding", pr_embeddings, "CFEM file for a neural branch (repeatable)");
  predict->add_option("--spectral-config", pr_spectral);

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP prediction service");
  serve->add_option("--config", sv.config, "key=value service config");
  serve->add_option("--host", sv.host);
  serve->add_option("--port", sv.port);
  serve->add_option("--model", sv.model, "CFWT weight file (COMFEAT_MODEL overrides)");

  try {
    app.parse(argc, argv);
    if (*extract && ex.audio.empty() && ex.manifest.empty()) {
      throw CLI::ValidationError("extract", "one of --audio or --manifest is required");
    }
    if (*extract && !ex.audio.empty() && ex.out.empty()) {
      throw CLI::ValidationError("extract", "--out is required with --audio");
    }
    if (*extract && !ex.manifest.empty() && ex.out_dir.empty()) {
      throw CLI::ValidationError("extract", "--out-dir is required with --manifest");
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return kExitUsage;
  }

  try {
    if (*extract) return run_extract(ex);
    if (*train) return run_train(tr);
    if (*eval) return run_eval(ev_model, ev_manifest, ev_spectral);
    if (*predict) return run_predict(pr_model, pr_audio, pr_embeddings, pr_spectral);
    if (*serve) return run_serve(sv);
  } catch (const std::exception& e) {
    std::cerr << "comfeat: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
