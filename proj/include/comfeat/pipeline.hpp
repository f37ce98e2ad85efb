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

#ifndef COMFEAT_PIPELINE_HPP_
#define COMFEAT_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comfeat/features.hpp"
#include "comfeat/neuralnet.hpp"
#include "comfeat/spectral.hpp"

namespace comfeat {

inline constexpr double kMinScore = 0.0;
inline constexpr double kMaxScore = 24.0;

struct ManifestEntry {
  std::string id;
  std::string audio_path;  // empty when every feature is precomputed
  std::map<FeatureSource, std::string> embedding_paths;
  double score = 0.0;

  bool operator==(const ManifestEntry&) const = default;
};

// CSV with header "id,audio_path,trillsson_path,xvector_path,score". Empty
// cells mean "not available". Paths are kept verbatim.
// Throws kBadHeader, kBadRow, kDuplicateId, kScoreOutOfRange.
std::vector<ManifestEntry> load_manifest(std::string_view csv);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

// Seeded Fisher-Yates permutation of 0..n-1 then floor(n * ratio) items to
// train and dev, remainder to test. Throws kEmpty, kInvalidArgument.
SplitIndices split_indices(std::size_t n, double train_ratio, double dev_ratio,
                           std::uint64_t seed);

struct DatasetSplit {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> dev;
  std::vector<ManifestEntry> test;
};

DatasetSplit split_dataset(std::span<const ManifestEntry> entries, double train_ratio,
                           double dev_ratio, std::uint64_t seed);

// Feature vectors for one entry in feature_set order. Relative paths are
// resolved against base_dir. Throws kMissingArtifact plus any decode/load error.
std::vector<FeatureVector> assemble_features(const ManifestEntry& entry,
                                             std::span<const FeatureSource> feature_set,
                                             const SpectralConfig& spectral_cfg,
                                             const std::filesystem::path& base_dir);

struct TrainConfig {
  std::vector<FeatureSource> feature_set;
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double dropout_p = 0.2;
  std::uint64_t seed = 0;
  double train_ratio = 0.8;
  double dev_ratio = 0.1;
  // Epochs without dev-RMSE improvement before stopping; 0 disables.
  std::size_t early_stop_patience = 10;
  std::size_t conv_filters = 32;
  std::size_t kernel_size = 3;
  std::vector<std::size_t> fcn_dims{256, 90};

  void validate() const;
  ModelConfig model_config(std::span<const Branch> branches) const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  std::optional<double> dev_mae;
  std::optional<double> dev_rmse;

  // {"epoch":..,"train_mse":..,"dev_mae":..,"dev_rmse":..}; dev fields are
  // null without a dev set.
  std::string to_json() const;
};

struct TrainResult {
  FusionModel model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 means the initial weights were kept
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Mini-batch Adam on pre-assembled examples. When dev is non-empty the weights
// of the best dev-RMSE epoch are returned; otherwise the last epoch's.
// Bit-reproducible for a given (config, example order). Throws kNoTrainData.
TrainResult train_examples(std::span<const Example> train, std::span<const Example> dev,
                           const TrainConfig& config,
                           const EpochCallback& on_epoch = {});

// Assembles features for every manifest entry, splits with config.seed and
// trains on the train partition with early stopping on the dev partition.
TrainResult train(std::span<const ManifestEntry> manifest,
                  const std::filesystem::path& base_dir, const TrainConfig& config,
                  const SpectralConfig& spectral_cfg, const EpochCallback& on_epoch = {});

struct EvalReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  std::vector<FeatureSource> feature_set;
  std::string model_version;

  std::string to_json() const;
};

// MAE and RMSE of predictions against targets. Throws kEmpty, kShapeMismatch.
EvalReport compute_metrics(std::span<const double> predictions,
                           std::span<const double> targets);

// Unclamped infer-mode predictions scored against example targets.
EvalReport evaluate(const FusionModel& model, std::span<const Example> examples);
EvalReport evaluate(const FusionModel& model, std::span<const ManifestEntry> entries,
                    const std::filesystem::path& base_dir,
                    const SpectralConfig& spectral_cfg);

enum class SeverityBand { kMinimal, kMild, kModerate, kModeratelySevere, kSevere };

std::string_view to_string(SeverityBand band);

struct Severity {
  double display_score = 0.0;
  SeverityBand band = SeverityBand::kMinimal;
};

// Clamps to [0, 24] and maps onto PHQ-8 bands: [0,5) minimal, [5,10) mild,
// [10,15) moderate, [15,20) moderately severe, [20,24] severe.
// Throws kNonFinite.
Severity severity_band(double score);

}  // namespace comfeat

#endif  // COMFEAT_PIPELINE_HPP_
