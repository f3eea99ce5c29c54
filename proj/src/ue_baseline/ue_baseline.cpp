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

#include "segqc/ue_baseline/ue_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "segqc/core/io.hpp"
#include "segqc/metrics/distance.hpp"
#include "segqc/util/error.hpp"
#include "segqc/util/parallel.hpp"

namespace segqc::ue_baseline {

namespace {

const char* mode_name(ScoreMode m) { return m == ScoreMode::kLiteral ? "literal" : "distance_from_confident"; }

double percentile(std::vector<float>& sorted_values, double q) {
  // Linear interpolation between closest ranks.
  const double pos = q * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  return sorted_values[lo] + (pos - static_cast<double>(lo)) * (sorted_values[hi] - sorted_values[lo]);
}

double binary_entropy(double f) {
  if (f <= 0.0 || f >= 1.0) return 0.0;
  return -(f * std::log(f) + (1.0 - f) * std::log(1.0 - f));
}

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

double uncertainty_score(double p, ScoreMode mode) noexcept {
  return mode == ScoreMode::kLiteral ? p : 1.0 - std::abs(2.0 * p - 1.0);
}

std::vector<double> threshold_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 19; ++k) g.push_back(k / 20.0);
  return g;
}

void to_json(nlohmann::json& j, const ThresholdCalibration& c) {
  j = nlohmann::json{{"schema_version", 1},
                     {"thresholds", c.thresholds},
                     {"mean_overlap", c.mean_overlap},
                     {"dataset_id", c.dataset_id},
                     {"mode", mode_name(c.mode)}};
}

void from_json(const nlohmann::json& j, ThresholdCalibration& c) {
  try {
    c.thresholds = j.at("thresholds").get<std::vector<double>>();
    c.mean_overlap = j.value("mean_overlap", std::vector<double>{});
    c.dataset_id = j.value("dataset_id", "");
    const std::string mode = j.value("mode", "distance_from_confident");
    if (mode == "literal")
      c.mode = ScoreMode::kLiteral;
    else if (mode == "distance_from_confident")
      c.mode = ScoreMode::kDistanceFromConfident;
    else
      fail_config("unknown uncertainty mode '" + mode + "'");
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("threshold calibration: ") + e.what());
  }
  for (double t : c.thresholds) {
    const double k = t * 20.0;
    if (!(t >= 0.05 - 1e-12 && t <= 0.95 + 1e-12) || std::abs(k - std::round(k)) > 1e-9)
      fail_config("calibrated threshold " + std::to_string(t) + " is not on the 0.05 grid");
  }
}

std::vector<std::uint8_t> binarize_channel(std::span<const float> umap, double threshold, ScoreMode mode) {
  std::vector<std::uint8_t> out(umap.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = uncertainty_score(umap[i], mode) >= threshold ? 1 : 0;
  return out;
}

double mean_overlap(const std::vector<const UMap*>& umaps, const std::vector<SEMStack>& sems, int c, double threshold,
                    ScoreMode mode) {
  double sum = 0.0;
  for (std::size_t i = 0; i < umaps.size(); ++i)
    sum += metrics::ue_overlap(binarize_channel(umaps[i]->channel(c), threshold, mode), sems[i].channel(c));
  return sum / static_cast<double>(umaps.size());
}

ThresholdCalibration calibrate_thresholds(const std::vector<UMap>& umaps, const std::vector<SEMStack>& sems,
                                          ScoreMode mode, const std::string& dataset_id, int workers) {
  std::vector<const UMap*> ptrs;
  for (const auto& u : umaps) ptrs.push_back(&u);
  return calibrate_thresholds(ptrs, sems, mode, dataset_id, workers);
}

ThresholdCalibration calibrate_thresholds(const std::vector<const UMap*>& umaps, const std::vector<SEMStack>& sems,
                                          ScoreMode mode, const std::string& dataset_id, int workers) {
  if (umaps.empty()) fail_config("threshold calibration needs at least one (UMap, SEM) pair");
  if (umaps.size() != sems.size()) fail_data("calibration UMap and SEM counts differ");
  const int C = umaps.front()->classes;
  for (std::size_t i = 0; i < umaps.size(); ++i) {
    if (umaps[i]->classes != C || sems[i].num_channels() != C) fail_data("calibration pairs differ in class count");
    if (!(umaps[i]->grid == sems[i].grid())) fail_data("calibration pair " + std::to_string(i) + " grids differ");
  }
  const auto grid = threshold_grid();
  std::vector<double> score(static_cast<std::size_t>(C) * grid.size());
  parallel_for(score.size(), workers, [&](std::size_t i) {
    score[i] = mean_overlap(umaps, sems, static_cast<int>(i / grid.size()), grid[i % grid.size()], mode);
  });
  ThresholdCalibration cal;
  cal.dataset_id = dataset_id;
  cal.mode = mode;
  for (int c = 0; c < C; ++c) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < grid.size(); ++k)
      if (score[c * grid.size() + k] > score[c * grid.size() + best]) best = k;
    cal.thresholds.push_back(grid[best]);
    cal.mean_overlap.push_back(score[c * grid.size() + best]);
  }
  return cal;
}

SEMStack umap_to_sem(const UMap& umap, const ThresholdCalibration& cal, const ClassHierarchy& hierarchy) {
  if (static_cast<int>(cal.thresholds.size()) != umap.classes || hierarchy.num_classes() != umap.classes)
    fail_data("calibration, UMap and hierarchy disagree on the class count");
  std::vector<std::uint8_t> data;
  data.reserve(umap.values.size());
  for (int c = 0; c < umap.classes; ++c) {
    const auto b = binarize_channel(umap.channel(c), cal.thresholds[c], cal.mode);
    data.insert(data.end(), b.begin(), b.end());
  }
  return SEMStack(umap.grid, std::move(data), hierarchy);
}

std::vector<double> umap_features(const UMap& umap, const ThresholdCalibration& cal) {
  if (static_cast<int>(cal.thresholds.size()) != umap.classes) fail_data("calibration class count differs from UMap");
  const std::size_t n = umap.grid.voxels();
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(kFeaturesPerClass) * umap.classes);
  for (int c = 0; c < umap.classes; ++c) {
    const auto ch = umap.channel(c);
    std::vector<std::uint8_t> fg(n);
    double sum = 0.0, sq = 0.0, fg_count = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += ch[i];
      sq += static_cast<double>(ch[i]) * ch[i];
      fg[i] = ch[i] >= 0.5f ? 1 : 0;
      fg_count += fg[i];
    }
    const double mean = sum / static_cast<double>(n);
    std::vector<float> sorted(ch.begin(), ch.end());
    std::sort(sorted.begin(), sorted.end());
    const auto flagged = binarize_channel(ch, cal.thresholds[c], cal.mode);
    double flagged_fraction = 0.0;
    for (auto v : flagged) flagged_fraction += v;
    flagged_fraction /= static_cast<double>(n);
    double boundary = 0.0;
    for (auto v : metrics::boundary(fg, umap.grid)) boundary += v;
    f.push_back(fg_count / static_cast<double>(n));
    f.push_back(mean);
    f.push_back(std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean)));
    f.push_back(sorted.front());
    f.push_back(sorted.back());
    f.push_back(percentile(sorted, 0.1));
    f.push_back(percentile(sorted, 0.5));
    f.push_back(percentile(sorted, 0.9));
    f.push_back(binary_entropy(flagged_fraction));
    f.push_back(boundary);
  }
  return f;
}

std::vector<std::string> feature_names(const ClassHierarchy& hierarchy) {
  static const char* base[kFeaturesPerClass] = {"volume_fraction", "mean", "std", "min", "max",
                                                "p10", "p50", "p90", "flagged_entropy", "boundary_voxels"};
  std::vector<std::string> out;
  for (const auto& c : hierarchy.classes())
    for (const char* b : base) out.push_back(c.name + "_" + b);
  return out;
}

void write_features_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const std::vector<std::vector<double>>& features, const ClassHierarchy& hierarchy) {
  if (ids.size() != features.size()) fail_data("feature rows and ids differ in count");
  std::string out = "id";
  for (const auto& n : feature_names(hierarchy)) out += "," + n;
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (double v : features[i]) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      out += buf;
    }
    out += "\n";
  }
  io::write_text(path, out);
}

metrics::QualityScores ScoreRegressor::predict(const std::vector<double>& features) const {
  const auto v = constant ? constant_value : forest.predict(features);
  return {std::clamp(v[0], 0.0, 1.0), std::clamp(v[1], 0.0, 1.0)};
}

void to_json(nlohmann::json& j, const ScoreRegressor& r) {
  j = nlohmann::json{{"schema_version", 1}, {"constant", r.constant}, {"flags", r.flags}};
  if (r.constant)
    j["constant_value"] = r.constant_value;
  else
    j["forest"] = r.forest;
}

void from_json(const nlohmann::json& j, ScoreRegressor& r) {
  try {
    r.constant = j.at("constant").get<bool>();
    r.flags = j.value("flags", std::vector<std::string>{});
    if (r.constant) {
      r.constant_value = j.at("constant_value").get<std::vector<double>>();
      if (r.constant_value.size() != 2) fail_config("constant regressor needs two values");
    } else {
      r.forest = j.at("forest").get<RandomForest>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("score regressor: ") + e.what());
  }
}

RegressionFit predict_scores_ue(const std::vector<std::vector<double>>& features,
                                const std::vector<metrics::QualityScores>& targets, const ForestConfig& cfg) {
  if (features.size() != targets.size()) fail_data("feature and target counts differ");
  if (features.size() < kMinRegressionPairs)
    fail_data("score regression needs at least " + std::to_string(kMinRegressionPairs) + " training pairs, got " +
              std::to_string(features.size()));
  std::vector<double> d, n;
  std::vector<std::vector<double>> Y;
  for (const auto& t : targets) {
    d.push_back(t.dsc);
    n.push_back(t.nsd);
    Y.push_back({t.dsc, t.nsd});
  }
  RegressionFit fit;
  if (is_constant(d) && is_constant(n)) {
    fit.regressor.constant = true;
    fit.regressor.constant_value = {d.front(), n.front()};
    fit.regressor.flags.push_back("constant targets: regressor predicts the training value");
  } else {
    fit.regressor.forest = RandomForest(cfg);
    fit.regressor.forest.fit(features, Y);
  }
  for (const auto& x : features) fit.predictions.push_back(fit.regressor.predict(x));
  return fit;
}

}  // namespace segqc::ue_baseline
