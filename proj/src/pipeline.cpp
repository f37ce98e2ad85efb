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

#include "comfeat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "byte_io.hpp"
#include "comfeat/audio_io.hpp"
#include "comfeat/embeddings.hpp"
#include "comfeat/error.hpp"
#include "json.hpp"

namespace comfeat {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kManifestHeader = "id,audio_path,trillsson_path,xvector_path,score";

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Unbiased integer in [0, bound) by rejection.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
  }
}

template <typename T>
std::vector<T> pick(std::span<const T> items, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

std::vector<Branch> branches_of(const Example& ex) {
  std::vector<Branch> b;
  for (const auto& v : ex.inputs) b.push_back({v.source, v.dim()});
  return b;
}

std::vector<FeatureSource> feature_set_of(const ModelConfig& cfg) {
  std::vector<FeatureSource> out;
  for (const Branch& b : cfg.branches) out.push_back(b.source);
  return out;
}

std::vector<Example> assemble_all(std::span<const ManifestEntry> entries,
                                  std::span<const FeatureSource> feature_set,
                                  const SpectralConfig& spectral_cfg,
                                  const std::filesystem::path& base_dir) {
  std::vector<Example> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    out.push_back({assemble_features(e, feature_set, spectral_cfg, base_dir), e.score});
  }
  return out;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(std::string_view csv) {
  if (csv.starts_with("\xEF\xBB\xBF")) csv.remove_prefix(3);
  std::vector<ManifestEntry> entries;
  std::set<std::string, std::less<>> seen;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (!csv.empty()) {
    const std::size_t nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    ++line_no;
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (!header_seen) {
      if (line != kManifestHeader) {
        throw Error(ErrorCode::kBadHeader, "expected header '" + std::string(kManifestHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    const std::string where = "line " + std::to_string(line_no);
    const auto cells = split_commas(line);
    if (cells.size() != 5) {
      throw Error(ErrorCode::kBadRow, where + ": expected 5 fields, got " +
                                          std::to_string(cells.size()));
    }
    ManifestEntry e;
    e.id = std::string(cells[0]);
    if (e.id.empty()) throw Error(ErrorCode::kBadRow, where + ": empty id");
    e.audio_path = std::string(cells[1]);
    if (!cells[2].empty()) e.embedding_paths[FeatureSource::kTrillsson] = std::string(cells[2]);
    if (!cells[3].empty()) e.embedding_paths[FeatureSource::kXvector] = std::string(cells[3]);

    const auto score_text = cells[4];
    const auto [end, ec] =
        std::from_chars(score_text.data(), score_text.data() + score_text.size(), e.score);
    if (ec != std::errc{} || end != score_text.data() + score_text.size() ||
        !std::isfinite(e.score)) {
      throw Error(ErrorCode::kBadRow, where + ": score '" + std::string(score_text) +
                                          "' is not a number");
    }
    if (e.score < kMinScore || e.score > kMaxScore) {
      throw Error(ErrorCode::kScoreOutOfRange, where + ": score " + std::string(score_text) +
                                                   " outside [0, 24]");
    }
    if (!seen.insert(e.id).second) {
      throw Error(ErrorCode::kDuplicateId, where + ": id '" + e.id + "' repeated");
    }
    entries.push_back(std::move(e));
  }
  if (!header_seen) throw Error(ErrorCode::kBadHeader, "empty manifest");
  return entries;
}

SplitIndices split_indices(std::size_t n, double train_ratio, double dev_ratio,
                           std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kEmpty, "nothing to split");
  if (!(train_ratio >= 0.0 && dev_ratio >= 0.0 && train_ratio + dev_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be non-negative and sum to at most 1");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);

  // The epsilon keeps products such as 10 * 0.6 from flooring to 5.
  const auto n_train = static_cast<std::size_t>(std::floor(n * train_ratio + 1e-9));
  const auto n_dev = std::min(n - n_train, static_cast<std::size_t>(std::floor(n * dev_ratio + 1e-9)));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.dev.assign(order.begin() + n_train, order.begin() + n_train + n_dev);
  s.test.assign(order.begin() + n_train + n_dev, order.end());
  return s;
}

DatasetSplit split_dataset(std::span<const ManifestEntry> entries, double train_ratio,
                           double dev_ratio, std::uint64_t seed) {
  const auto s = split_indices(entries.size(), train_ratio, dev_ratio, seed);
  return {pick(entries, s.train), pick(entries, s.dev), pick(entries, s.test)};
}

std::vector<FeatureVector> assemble_features(const ManifestEntry& entry,
                                             std::span<const FeatureSource> feature_set,
                                             const SpectralConfig& spectral_cfg,
                                             const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::optional<AudioClip> audio;
  std::vector<FeatureVector> out;
  out.reserve(feature_set.size());
  for (FeatureSource source : feature_set) {
    if (is_spectral(source)) {
      if (!audio) {
        if (entry.audio_path.empty()) {
          throw Error(ErrorCode::kMissingArtifact, entry.id + ": no audio for " +
                                                       std::string(to_string(source)));
        }
        audio = prepare_for_model(decode_wav(detail::read_file(resolve(entry.audio_path))));
      }
      out.push_back(spectral_vector(*audio, source, spectral_cfg));
    } else {
      const auto it = entry.embedding_paths.find(source);
      if (it == entry.embedding_paths.end()) {
        throw Error(ErrorCode::kMissingArtifact, entry.id + ": no " +
                                                     std::string(to_string(source)) + " embedding");
      }
      out.push_back(load_embedding(detail::read_file(resolve(it->second)), source));
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (feature_set.empty()) throw Error(ErrorCode::kBadConfig, "feature_set is empty");
  std::set<FeatureSource> unique(feature_set.begin(), feature_set.end());
  if (unique.size() != feature_set.size()) {
    throw Error(ErrorCode::kBadConfig, "feature_set lists a source twice");
  }
  if (batch_size == 0) throw Error(ErrorCode::kBadConfig, "batch_size must be positive");
  if (!(lr > 0.0)) throw Error(ErrorCode::kBadConfig, "lr must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw Error(ErrorCode::kBadConfig, "dropout_p must lie in [0, 1)");
  }
  if (!(train_ratio > 0.0 && train_ratio < 1.0 && dev_ratio > 0.0 && dev_ratio < 1.0 &&
        train_ratio + dev_ratio < 1.0)) {
    throw Error(ErrorCode::kBadConfig, "split ratios must lie in (0, 1) and sum below 1");
  }
}

ModelConfig TrainConfig::model_config(std::span<const Branch> branches) const {
  ModelConfig cfg;
  cfg.branches.assign(branches.begin(), branches.end());
  cfg.conv_filters = conv_filters;
  cfg.kernel_size = kernel_size;
  cfg.fcn_dims = fcn_dims;
  cfg.dropout_p = dropout_p;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

std::string EpochLog::to_json() const {
  ordered_json j;
  j["epoch"] = epoch;
  j["train_mse"] = train_mse;
  j["dev_mae"] = dev_mae ? ordered_json(*dev_mae) : ordered_json(nullptr);
  j["dev_rmse"] = dev_rmse ? ordered_json(*dev_rmse) : ordered_json(nullptr);
  return j.dump();
}

TrainResult train_examples(std::span<const Example> train, std::span<const Example> dev,
                           const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train.empty()) throw Error(ErrorCode::kNoTrainData, "training partition is empty");
  const auto branches = branches_of(train.front());
  TrainResult result{init_model(config.model_config(branches)), {}, 0};
  if (config.epochs == 0) return result;

  FusionModel model = result.model;
  AdamState adam(model.parameters().size(), AdamOptions{.lr = config.lr});
  // Separate stream from the initializer so changing epochs never changes init.
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double best_rmse = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      const auto batch = std::span<const std::size_t>(order).subspan(start, len);
      const auto lg = loss_and_gradients(model, train, batch, Mode::kTrain, rng);
      loss_sum += lg.loss * static_cast<double>(len);
      adam.step(model.parameters(), lg.gradients);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_mse = loss_sum / static_cast<double>(train.size());
    if (!dev.empty()) {
      const auto report = evaluate(model, dev);
      log.dev_mae = report.mae;
      log.dev_rmse = report.rmse;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);

    if (dev.empty()) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (*log.dev_rmse < best_rmse) {
      best_rmse = *log.dev_rmse;
      result.model = model;
      result.best_epoch = epoch;
    } else if (config.early_stop_patience > 0 &&
               epoch - result.best_epoch >= config.early_stop_patience) {
      break;
    }
  }
  return result;
}

TrainResult train(std::span<const ManifestEntry> manifest, const std::filesystem::path& base_dir,
                  const TrainConfig& config, const SpectralConfig& spectral_cfg,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (manifest.empty()) throw Error(ErrorCode::kNoTrainData, "manifest is empty");
  const auto split =
      split_indices(manifest.size(), config.train_ratio, config.dev_ratio, config.seed);
  if (split.train.empty()) throw Error(ErrorCode::kNoTrainData, "training partition is empty");
  const auto examples = assemble_all(manifest, config.feature_set, spectral_cfg, base_dir);
  const auto branches = branches_of(examples.front());
  for (const auto& ex : examples) {
    if (branches_of(ex) != branches) {
      throw Error(ErrorCode::kDimensionMismatch, "feature dimensions differ between entries");
    }
  }
  const auto train_set = pick<Example>(examples, split.train);
  const auto dev_set = pick<Example>(examples, split.dev);
  return train_examples(train_set, dev_set, config, on_epoch);
}

std::string EvalReport::to_json() const {
  ordered_json j;
  j["mae"] = mae;
  j["rmse"] = rmse;
  j["n"] = n;
  j["feature_set"] = ordered_json::array();
  for (auto s : feature_set) j["feature_set"].push_back(std::string(to_string(s)));
  j["model_version"] = model_version;
  return j.dump();
}

EvalReport compute_metrics(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw Error(ErrorCode::kEmpty, "no predictions to score");
  if (predictions.size() != targets.size()) {
    throw Error(ErrorCode::kShapeMismatch, "predictions and targets differ in length");
  }
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(predictions.size());
  EvalReport r;
  r.n = predictions.size();
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  return r;
}

EvalReport evaluate(const FusionModel& model, std::span<const Example> examples) {
  if (examples.empty()) throw Error(ErrorCode::kEmpty, "nothing to evaluate");
  std::vector<double> preds, targets;
  preds.reserve(examples.size());
  targets.reserve(examples.size());
  for (const auto& ex : examples) {
    preds.push_back(predict(model, ex.inputs));
    targets.push_back(ex.target);
  }
  EvalReport r = compute_metrics(preds, targets);
  r.feature_set = feature_set_of(model.config());
  return r;
}

EvalReport evaluate(const FusionModel& model, std::span<const ManifestEntry> entries,
                    const std::filesystem::path& base_dir, const SpectralConfig& spectral_cfg) {
  if (entries.empty()) throw Error(ErrorCode::kEmpty, "nothing to evaluate");
  const auto fs = feature_set_of(model.config());
  return evaluate(model, assemble_all(entries, fs, spectral_cfg, base_dir));
}

std::string_view to_string(SeverityBand band) {
  switch (band) {
    case SeverityBand::kMinimal: return "minimal";
    case SeverityBand::kMild: return "mild";
    case SeverityBand::kModerate: return "moderate";
    case SeverityBand::kModeratelySevere: return "moderately-severe";
    case SeverityBand::kSevere: return "severe";
  }
  return "minimal";
}

Severity severity_band(double score) {
  if (!std::isfinite(score)) throw Error(ErrorCode::kNonFinite, "score is not finite");
  Severity s;
  s.display_score = std::clamp(score, kMinScore, kMaxScore);
  if (s.display_score < 5.0) {
    s.band = SeverityBand::kMinimal;
  } else if (s.display_score < 10.0) {
    s.band = SeverityBand::kMild;
  } else if (s.display_score < 15.0) {
    s.band = SeverityBand::kModerate;
  } else if (s.display_score < 20.0) {
    s.band = SeverityBand::kModeratelySevere;
  } else {
    s.band = SeverityBand::kSevere;
  }
  return s;
}

}  // namespace comfeat
