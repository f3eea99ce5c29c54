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
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "segqc/datagen/manifest.hpp"
#include "segqc/engine/evaluate.hpp"
#include "segqc/proxyseg/proxyseg.hpp"
#include "segqc/ue_baseline/ue_baseline.hpp"

namespace segqc::ue_baseline {

/// Mean MC-dropout class probabilities of the proxy segmenter.
UMap compute_umap(const proxyseg::ProxySegmenter& segmenter, const Volume& image, int T, std::uint64_t seed);

struct UEOptions {
  int mc_samples = 50;
  std::uint64_t seed = 0;
  ScoreMode mode = ScoreMode::kDistanceFromConfident;
  ForestConfig forest;
  int workers = 1;
};

void to_json(nlohmann::json& j, const UEOptions& o);
void from_json(const nlohmann::json& j, UEOptions& o);

/// Calibrated thresholds plus the fitted score regressor. Prediction only
/// reads the image (through the UMap), never ground truth.
struct UEModel {
  ThresholdCalibration calibration;
  ScoreRegressor regressor;
  UEOptions options;

  void save(const std::filesystem::path& dir) const;
  static UEModel load(const std::filesystem::path& dir);
};

/// UMaps per case id, computed once. With `disk_dir`, maps are also read
/// from and written to `<disk_dir>/<case_id>.nii.gz`; the caller keys the
/// directory on the segmenter, T and seed.
class UMapCache {
 public:
  UMapCache(const proxyseg::ProxySegmenter& segmenter, int T, std::uint64_t seed,
            std::optional<std::filesystem::path> disk_dir = std::nullopt)
      : segmenter_(&segmenter), T_(T), seed_(seed), disk_dir_(std::move(disk_dir)) {}
  const UMap& get(const std::string& case_id, const Volume& image);

 private:
  UMap load_or_compute(const std::string& case_id, const Volume& image) const;

  const proxyseg::ProxySegmenter* segmenter_;
  int T_;
  std::uint64_t seed_;
  std::optional<std::filesystem::path> disk_dir_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<UMap>> maps_;
};

struct UEFitReport {
  std::vector<std::string> seg_ids;
  std::vector<std::vector<double>> features;
  std::vector<metrics::QualityScores> targets;
  std::vector<metrics::QualityScores> predictions;
};

/// Calibrates on every (UMap, SEM) pair of the listed cases, then fits the
/// regressor on their features and stored scores.
UEModel fit_ue_baseline(const datagen::DatasetManifest& manifest, const std::vector<std::string>& case_ids,
                        UMapCache& umaps, const UEOptions& options, UEFitReport* report = nullptr);

engine::Predictor ue_predictor(const UEModel& model, UMapCache& umaps, const ClassHierarchy& hierarchy);

}  // namespace segqc::ue_baseline
