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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "segqc/core/io.hpp"
#include "segqc/datagen/dataset.hpp"
#include "segqc/datagen/phantom.hpp"
#include "segqc/ue_baseline/forest.hpp"
#include "segqc/ue_baseline/pipeline.hpp"
#include "segqc/ue_baseline/ue_baseline.hpp"
#include "segqc/util/error.hpp"
#include "support/oracles.hpp"

using namespace segqc;
using namespace segqc::ue_baseline;

namespace {

UMap random_umap(Grid g, int C, std::mt19937_64& rng) {
  UMap u{g, C, std::vector<float>(static_cast<std::size_t>(C) * g.voxels())};
  std::uniform_real_distribution<float> U(0.0f, 1.0f);
  for (auto& v : u.values) v = U(rng);
  return u;
}

SEMStack random_sem(Grid g, std::mt19937_64& rng, double p = 0.3) {
  std::bernoulli_distribution B(p);
  std::vector<std::uint8_t> d(3 * g.voxels());
  for (auto& v : d) v = B(rng);
  return SEMStack(g, std::move(d), ClassHierarchy::brats());
}

// UMap correlated with the errors so thresholds matter.
UMap informative_umap(const SEMStack& sem, std::mt19937_64& rng) {
  UMap u{sem.grid(), 3, std::vector<float>(sem.data().size())};
  std::normal_distribution<float> N(0.0f, 0.15f);
  for (std::size_t i = 0; i < u.values.size(); ++i)
    u.values[i] = std::clamp((sem.data()[i] ? 0.5f : 0.05f) + N(rng), 0.0f, 1.0f);
  return u;
}

// Exhaustive sweep with set-based overlap.
std::vector<double> sweep_oracle(const std::vector<UMap>& umaps, const std::vector<SEMStack>& sems, int c,
                                 bool literal) {
  std::vector<double> means;
  for (int k = 1; k <= 19; ++k) {
    const double t = k / 20.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < umaps.size(); ++i) {
      std::vector<std::uint8_t> flag(umaps[i].grid.voxels());
      const auto ch = umaps[i].channel(c);
      for (std::size_t v = 0; v < flag.size(); ++v) {
        const double p = ch[v];
        const double s = literal ? p : std::min(2.0 * p, 2.0 - 2.0 * p);
        flag[v] = s >= t;
      }
      const auto e = sems[i].channel(c);
      sum += oracle::set_dice(oracle::voxel_set(flag), oracle::voxel_set({e.begin(), e.end()}));
    }
    means.push_back(sum / umaps.size());
  }
  return means;
}

}  // namespace

TEST_CASE("threshold grid") {
  const auto g = threshold_grid();
  REQUIRE(g.size() == 19);
  CHECK(g.front() == 0.05);
  CHECK(g.back() == 0.95);
  CHECK(g[9] == 0.5);
}

TEST_CASE("calibration: separable construction picks the smallest maximising threshold") {
  const Grid g{4, 4, 4};
  std::mt19937_64 rng(1);
  std::vector<UMap> umaps;
  std::vector<SEMStack> sems;
  for (int i = 0; i < 4; ++i) {
    sems.push_back(random_sem(g, rng));
    UMap u{g, 3, std::vector<float>(sems.back().data().size())};
    // Literal mode: errors carry 0.9, correct voxels 0.1.
    for (std::size_t v = 0; v < u.values.size(); ++v) u.values[v] = sems.back().data()[v] ? 0.9f : 0.1f;
    umaps.push_back(u);
  }
  const auto cal = calibrate_thresholds(umaps, sems, ScoreMode::kLiteral);
  for (int c = 0; c < 3; ++c) {
    CHECK(cal.thresholds[c] == 0.15);
    CHECK(cal.mean_overlap[c] == 1.0);
  }
}

TEST_CASE("calibration equals the exhaustive sweep argmax on random pairs") {
  std::mt19937_64 rng(7);
  const Grid g{6, 6, 6};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<UMap> umaps;
    std::vector<SEMStack> sems;
    for (int i = 0; i < 3; ++i) {
      sems.push_back(random_sem(g, rng, 0.1 + 0.05 * (trial % 8)));
      umaps.push_back(trial % 2 ? random_umap(g, 3, rng) : informative_umap(sems.back(), rng));
    }
    const bool literal = trial % 3 == 0;
    const auto cal = calibrate_thresholds(umaps, sems, literal ? ScoreMode::kLiteral : ScoreMode::kDistanceFromConfident,
                                          "", 1 + trial % 3);
    for (int c = 0; c < 3; ++c) {
      const auto means = sweep_oracle(umaps, sems, c, literal);
      const auto best = std::max_element(means.begin(), means.end()) - means.begin();
      CHECK(cal.thresholds[c] == (best + 1) / 20.0);
      CHECK(cal.mean_overlap[c] == doctest::Approx(means[best]).epsilon(1e-12));
    }
  }
}

TEST_CASE("calibration is invariant to duplicated pairs and rejects an empty set") {
  std::mt19937_64 rng(3);
  const Grid g{5, 5, 5};
  std::vector<UMap> umaps;
  std::vector<SEMStack> sems;
  for (int i = 0; i < 3; ++i) {
    sems.push_back(random_sem(g, rng));
    umaps.push_back(informative_umap(sems.back(), rng));
  }
  const auto once = calibrate_thresholds(umaps, sems);
  auto u2 = umaps;
  auto s2 = sems;
  u2.insert(u2.end(), umaps.begin(), umaps.end());
  s2.insert(s2.end(), sems.begin(), sems.end());
  CHECK(calibrate_thresholds(u2, s2).thresholds == once.thresholds);
  CHECK_THROWS_AS(calibrate_thresholds(std::vector<UMap>{}, {}), Error);
  const auto back = nlohmann::json(once).get<ThresholdCalibration>();
  CHECK(back.thresholds == once.thresholds);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"thresholds":[0.07]})").get<ThresholdCalibration>(), Error);
}

TEST_CASE("umap_to_sem") {
  const Grid g{3, 3, 3};
  const auto h = ClassHierarchy::brats();
  ThresholdCalibration cal;
  for (double t : threshold_grid()) {
    cal.thresholds = {t, t, t};
    UMap sure{g, 3, std::vector<float>(81, 1.0f)};
    std::fill(sure.values.begin(), sure.values.begin() + 27, 0.0f);
    for (int c = 0; c < 3; ++c) CHECK(umap_to_sem(sure, cal, h).count(c) == 0);
    const UMap half{g, 3, std::vector<float>(81, 0.5f)};
    for (int c = 0; c < 3; ++c) CHECK(umap_to_sem(half, cal, h).count(c) == 27);
  }

  std::mt19937_64 rng(5);
  const auto u = random_umap(g, 3, rng);
  cal.thresholds = {0.5, 0.5, 0.5};
  const auto sem = umap_to_sem(u, cal, h);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < u.values.size(); ++i)
    mismatches += sem.data()[i] != (1.0 - std::abs(2.0 * u.values[i] - 1.0) >= 0.5);
  CHECK(mismatches == 0);
}

TEST_CASE("thresholding is monotone on 100 random maps") {
  std::mt19937_64 rng(11);
  const Grid g{6, 6, 6};
  for (int i = 0; i < 100; ++i) {
    const auto u = random_umap(g, 3, rng);
    for (auto mode : {ScoreMode::kDistanceFromConfident, ScoreMode::kLiteral}) {
      std::vector<std::uint8_t> prev(u.values.size(), 1);
      for (double t : threshold_grid()) {
        const auto cur = binarize_channel(u.values, t, mode);
        std::size_t added = 0;
        for (std::size_t v = 0; v < cur.size(); ++v) added += cur[v] && !prev[v];
        CHECK(added == 0);
        prev = cur;
      }
    }
  }
}

TEST_CASE("features: length, finiteness and hand-checked values") {
  const Grid g{4, 4, 4};
  UMap u{g, 3, std::vector<float>(3 * 64, 0.0f)};
  // Class 0: a 2x2x2 cube of 1.0 in the middle, everything else 0.
  for (int z = 1; z < 3; ++z)
    for (int y = 1; y < 3; ++y)
      for (int x = 1; x < 3; ++x) u.values[g.index(z, y, x)] = 1.0f;
  ThresholdCalibration cal;
  cal.thresholds = {0.5, 0.5, 0.5};
  const auto f = umap_features(u, cal);
  REQUIRE(f.size() == 30);
  for (double v : f) CHECK(std::isfinite(v));
  CHECK(f[0] == doctest::Approx(8.0 / 64));
  CHECK(f[1] == doctest::Approx(8.0 / 64));
  CHECK(f[3] == 0.0);
  CHECK(f[4] == 1.0);
  CHECK(f[6] == 0.0);
  CHECK(f[8] == 0.0);   // nothing uncertain
  CHECK(f[9] == 8.0);   // every cube voxel touches background
  CHECK(feature_names(ClassHierarchy::brats()).size() == 30);
}

TEST_CASE("forest: memorises, is deterministic and round-trips") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<std::vector<double>> X;
  std::vector<metrics::QualityScores> Y;
  for (int i = 0; i < 60; ++i) {
    X.push_back({U(rng), U(rng), U(rng)});
    Y.push_back({0.5 * X.back()[0] + 0.4 * X.back()[1] * X.back()[1], X.back()[2]});
  }
  ForestConfig cfg;
  cfg.seed = 4;
  const auto fit = predict_scores_ue(X, Y, cfg);
  CHECK(fit.regressor.forest.trees().size() == 100);
  double mae = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) mae += std::abs(fit.predictions[i].dsc - Y[i].dsc) / X.size();
  CHECK(mae < 0.05);
  const auto again = predict_scores_ue(X, Y, cfg);
  for (std::size_t i = 0; i < X.size(); ++i) CHECK(again.predictions[i].dsc == fit.predictions[i].dsc);
  const auto back = nlohmann::json(fit.regressor).get<ScoreRegressor>();
  for (std::size_t i = 0; i < X.size(); ++i) CHECK(back.predict(X[i]).nsd == fit.predictions[i].nsd);

  std::vector<metrics::QualityScores> flat(X.size(), {0.7, 0.6});
  const auto c = predict_scores_ue(X, flat, cfg);
  CHECK(c.regressor.constant);
  CHECK_FALSE(c.regressor.flags.empty());
  CHECK(c.predictions[3].dsc == 0.7);
  CHECK_THROWS_AS(predict_scores_ue({X.begin(), X.begin() + 9}, {Y.begin(), Y.begin() + 9}, cfg), Error);
}

TEST_CASE("single regression tree fits a step exactly") {
  std::vector<std::vector<double>> X, Y;
  for (int i = 0; i < 10; ++i) {
    X.push_back({static_cast<double>(i)});
    Y.push_back({i < 4 ? 1.0 : 3.0});
  }
  ForestConfig cfg;
  cfg.trees = 1;
  cfg.bootstrap = false;
  RandomForest f(cfg);
  f.fit(X, Y);
  const auto& nodes = f.trees().front().nodes;
  REQUIRE(nodes.size() == 3);
  CHECK(nodes[0].threshold == 3.5);
  CHECK(f.predict({2.0})[0] == 1.0);
  CHECK(f.predict({8.0})[0] == 3.0);
}

TEST_CASE("pipeline: prediction ignores ground truth") {
  const auto dir = std::filesystem::temp_directory_path() / "segqc_ue_ds";
  std::filesystem::remove_all(dir);
  datagen::PhantomSpec spec;
  spec.grid = {16, 16, 16};
  spec.radii = {{5, 6.5}, {3, 4}, {1.5, 2.5}};
  auto manifest = datagen::synthesize_dataset(spec, dir, 4, 2);
  datagen::DegradeOptions opt;
  opt.seggen.applications_per_gt = 4;
  opt.seggen.translation_vox = {-4, 4};
  opt.seggen.deform_displacement_vox = {-4, 4};
  opt.seed = 1;
  datagen::degrade_dataset(manifest, opt);
  manifest = datagen::DatasetManifest::load(dir);

  proxyseg::ProxySegmenter seg({.modalities = 2, .base_filters = 4}, manifest.hierarchy, 3);
  UMapCache cache(seg, 3, 9);
  UEOptions o;
  o.mc_samples = 3;
  o.seed = 9;
  o.forest.trees = 10;
  UEFitReport rep;
  const auto model = fit_ue_baseline(manifest, {}, cache, o, &rep);
  CHECK(rep.features.size() == 16);
  CHECK(rep.features.front().size() == 30);
  model.save(dir / "ue");
  const auto loaded = UEModel::load(dir / "ue");
  CHECK(loaded.calibration.thresholds == model.calibration.thresholds);

  const auto pred = ue_predictor(loaded, cache, manifest.hierarchy);
  const auto& c0 = manifest.cases[0];
  const auto img = manifest.load_image(c0);
  const auto q = manifest.load_seg(c0.segs[0]);
  const auto gt_a = manifest.load_gt(c0);
  const auto gt_b = manifest.load_gt(manifest.cases[1]);
  const auto pa = pred({c0, c0.segs[0], img, q, gt_a});
  const auto pb = pred({c0, c0.segs[0], img, q, gt_b});
  CHECK(pa.dsc_pred == pb.dsc_pred);
  CHECK(pa.sem_prob == pb.sem_prob);

  // Fresh cache, same seed: identical UMap.
  UMapCache other(seg, 3, 9);
  CHECK(other.get(c0.case_id, img).values == cache.get(c0.case_id, img).values);
}
