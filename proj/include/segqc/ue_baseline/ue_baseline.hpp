// Copyright 2026 The segqc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "segqc/core/hierarchy.hpp"
#include "segqc/core/masks.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/ue_baseline/forest.hpp"

namespace segqc::ue_baseline {

/// How a mean class probability p becomes a per-voxel uncertainty score.
enum class ScoreMode {
  kDistanceFromConfident,  // 1 - |2p - 1|
  kLiteral                 // p itself
};

double uncertainty_score(double p, ScoreMode mode) noexcept;

/// Candidate thresholds k * 0.05, k = 1..19.
std::vector<double> threshold_grid();

/// Per-class mean probability maps (C, D, H, W) over `grid`.
struct UMap {
  Grid grid;
  int classes = 0;
  std::vector<float> values;

  [[nodiscard]] std::span<const float> channel(int c) const {
    return std::span<const float>(values).subspan(static_cast<std::size_t>(c) * grid.voxels(), grid.voxels());
  }
};

struct ThresholdCalibration {
  std::vector<double> thresholds;    // per class, on the grid
  std::vector<double> mean_overlap;  // achieved mean UE overlap per class
  std::string dataset_id;
  ScoreMode mode = ScoreMode::kDistanceFromConfident;
};

void to_json(nlohmann::json& j, const ThresholdCalibration& c);
void from_json(const nlohmann::json& j, ThresholdCalibration& c);

/// Binary map of voxels whose score reaches `threshold`.
std::vector<std::uint8_t> binarize_channel(std::span<const float> umap, double threshold, ScoreMode mode);

/// Mean UE overlap of class c at `threshold` over the calibration pairs.
double mean_overlap(const std::vector<const UMap*>& umaps, const std::vector<SEMStack>& sems, int c, double threshold,
                    ScoreMode mode);

/// Per class, the grid threshold with the highest mean overlap; ties go to
/// the smallest threshold.
ThresholdCalibration calibrate_thresholds(const std::vector<UMap>& umaps, const std::vector<SEMStack>& sems,
                                          ScoreMode mode = ScoreMode::kDistanceFromConfident,
                                          const std::string& dataset_id = "", int workers = 1);
/// Same, for pairs that share UMaps.
ThresholdCalibration calibrate_thresholds(const std::vector<const UMap*>& umaps, const std::vector<SEMStack>& sems,
                                          ScoreMode mode = ScoreMode::kDistanceFromConfident,
                                          const std::string& dataset_id = "", int workers = 1);

SEMStack umap_to_sem(const UMap& umap, const ThresholdCalibration& cal, const ClassHierarchy& hierarchy);

inline constexpr int kFeaturesPerClass = 10;

/// Per class: volume fraction (p >= 0.5), mean, std, min, max, 10/50/90th
/// percentiles of p, binary entropy of the flagged fraction, boundary voxels
/// of the p >= 0.5 mask.
std::vector<double> umap_features(const UMap& umap, const ThresholdCalibration& cal);
std::vector<std::string> feature_names(const ClassHierarchy& hierarchy);

void write_features_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const std::vector<std::vector<double>>& features, const ClassHierarchy& hierarchy);

/// Forest regressor from UMap features to (DSC, NSD).
struct ScoreRegressor {
  RandomForest forest;
  bool constant = false;
  std::vector<double> constant_value;  // used when `constant`
  std::vector<std::string> flags;

  [[nodiscard]] metrics::QualityScores predict(const std::vector<double>& features) const;
};

void to_json(nlohmann::json& j, const ScoreRegressor& r);
void from_json(const nlohmann::json& j, ScoreRegressor& r);

inline constexpr std::size_t kMinRegressionPairs = 10;

struct RegressionFit {
  ScoreRegressor regressor;
  std::vector<metrics::QualityScores> predictions;  // on the training rows
};

/// Fits the regressor; constant targets are flagged and give a constant predictor.
RegressionFit predict_scores_ue(const std::vector<std::vector<double>>& features,
                                const std::vector<metrics::QualityScores>& targets, const ForestConfig& cfg);

}  // namespace segqc::ue_baseline
