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

#include "segqc/ue_baseline/pipeline.hpp"

#include <algorithm>

#include "segqc/core/io.hpp"
#include "segqc/util/error.hpp"
#include "segqc/util/parallel.hpp"

namespace segqc::ue_baseline {

UMap compute_umap(const proxyseg::ProxySegmenter& segmenter, const Volume& image, int T, std::uint64_t seed) {
  const auto labels = segmenter.mc_dropout_umap(image, T, seed);
  UMap u;
  u.grid = image.grid();
  u.classes = segmenter.hierarchy().num_classes();
  u.values = proxyseg::class_probabilities(labels, segmenter.hierarchy(), image.grid());
  return u;
}

void to_json(nlohmann::json& j, const UEOptions& o) {
  j = nlohmann::json{{"mc_samples", o.mc_samples},
                     {"seed", o.seed},
                     {"mode", o.mode == ScoreMode::kLiteral ? "literal" : "distance_from_confident"},
                     {"forest", o.forest},
                     {"workers", o.workers}};
}

void from_json(const nlohmann::json& j, UEOptions& o) {
  try {
    o = UEOptions{};
    o.mc_samples = j.value("mc_samples", o.mc_samples);
    o.seed = j.value("seed", o.seed);
    const std::string mode = j.value("mode", "distance_from_confident");
    if (mode == "literal")
      o.mode = ScoreMode::kLiteral;
    else if (mode == "distance_from_confident")
      o.mode = ScoreMode::kDistanceFromConfident;
    else
      fail_config("unknown uncertainty mode '" + mode + "'");
    if (j.contains("forest")) o.forest = j.at("forest").get<ForestConfig>();
    o.workers = j.value("workers", o.workers);
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("uncertainty baseline options: ") + e.what());
  }
  if (o.mc_samples < 1) fail_config("mc_samples must be >= 1");
}

void UEModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "calibration.json", nlohmann::json(calibration).dump(2) + "\n");
  io::write_text(dir / "regressor.json", nlohmann::json(regressor).dump() + "\n");
  io::write_text(dir / "options.json", nlohmann::json(options).dump(2) + "\n");
}

UEModel UEModel::load(const std::filesystem::path& dir) {
  auto parse = [&](const char* name) {
    auto j = nlohmann::json::parse(io::read_text(dir / name), nullptr, false);
    if (j.is_discarded()) fail_config("malformed " + (dir / name).string());
    return j;
  };
  UEModel m;
  m.calibration = parse("calibration.json").get<ThresholdCalibration>();
  m.regressor = parse("regressor.json").get<ScoreRegressor>();
  m.options = parse("options.json").get<UEOptions>();
  return m;
}

UMap UMapCache::load_or_compute(const std::string& case_id, const Volume& image) const {
  const auto file = disk_dir_ ? *disk_dir_ / (case_id + ".nii.gz") : std::filesystem::path();
  if (disk_dir_ && std::filesystem::exists(file)) {
    auto t = io::read_tensor(file);
    if (t.grid == image.grid() && t.channels == segmenter_->hierarchy().num_classes())
      return UMap{t.grid, t.channels, std::move(t.values)};
  }
  // Per-case stream, so the map does not depend on evaluation order.
  UMap u = compute_umap(*segmenter_, image, T_, derive_seed(seed_, hash_id(case_id)));
  if (disk_dir_) {
    std::filesystem::create_directories(*disk_dir_);
    io::write_float_channels(file, u.values, u.classes, u.grid);
  }
  return u;
}

const UMap& UMapCache::get(const std::string& case_id, const Volume& image) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = maps_.find(case_id); it != maps_.end()) return *it->second;
  }
  auto u = std::make_unique<UMap>(load_or_compute(case_id, image));
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = maps_.try_emplace(case_id, std::move(u));
  return *it->second;
}

UEModel fit_ue_baseline(const datagen::DatasetManifest& manifest, const std::vector<std::string>& case_ids,
                        UMapCache& umaps, const UEOptions& options, UEFitReport* report) {
  std::vector<const datagen::CaseEntry*> cases;
  for (const auto& c : manifest.cases)
    if (case_ids.empty() || std::find(case_ids.begin(), case_ids.end(), c.case_id) != case_ids.end())
      cases.push_back(&c);
  if (cases.empty()) fail_data("no calibration cases");

  std::vector<const UMap*> case_umap(cases.size());
  parallel_for(cases.size(), options.workers, [&](std::size_t i) {
    case_umap[i] = &umaps.get(cases[i]->case_id, manifest.load_image(*cases[i]));
  });

  std::vector<const UMap*> pair_umaps;
  std::vector<SEMStack> pair_sems;
  std::vector<std::string> ids;
  std::vector<metrics::QualityScores> targets;
  std::vector<std::size_t> pair_case;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto gt = manifest.load_gt(*cases[i]);
    for (const auto& s : cases[i]->segs) {
      pair_umaps.push_back(case_umap[i]);
      pair_sems.push_back(metrics::sem_ground_truth(manifest.load_seg(s), gt));
      ids.push_back(s.seg_id);
      targets.push_back({s.dsc, s.nsd});
      pair_case.push_back(i);
    }
  }
  if (pair_sems.empty()) fail_data("calibration cases have no segmentations");

  UEModel model;
  model.options = options;
  model.calibration = calibrate_thresholds(pair_umaps, pair_sems, options.mode, manifest.root.string(), options.workers);
  std::vector<std::vector<double>> case_features(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) case_features[i] = umap_features(*case_umap[i], model.calibration);
  std::vector<std::vector<double>> features;
  for (std::size_t p : pair_case) features.push_back(case_features[p]);
  auto fit = predict_scores_ue(features, targets, options.forest);
  model.regressor = std::move(fit.regressor);
  if (report) *report = {ids, features, targets, fit.predictions};
  return model;
}

engine::Predictor ue_predictor(const UEModel& model, UMapCache& umaps, const ClassHierarchy& hierarchy) {
  return [&model, &umaps, hierarchy](const engine::EvalInput& in) {
    const UMap& u = umaps.get(in.case_entry.case_id, in.image);
    const auto scores = model.regressor.predict(umap_features(u, model.calibration));
    const auto sem = umap_to_sem(u, model.calibration, hierarchy);
    model::QCPrediction p;
    p.dsc_pred = scores.dsc;
    p.nsd_pred = scores.nsd;
    p.classes = u.classes;
    p.grid = u.grid;
    p.sem_prob.assign(sem.data().begin(), sem.data().end());
    return p;
  };
}

}  // namespace segqc::ue_baseline
