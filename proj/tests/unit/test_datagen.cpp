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
#include <set>

#include "segqc/core/encoding.hpp"
#include "segqc/datagen/balance.hpp"
#include "segqc/datagen/dataset.hpp"
#include "segqc/datagen/phantom.hpp"
#include "segqc/datagen/seggen.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/core/io.hpp"
#include "segqc/util/error.hpp"

using namespace segqc;
using namespace segqc::datagen;

TEST_CASE("phantom: zero noise gives exact class means") {
  PhantomSpec s;
  s.noise_std = 0.0;
  for (auto& row : s.intensity_std)
    for (auto& v : row) v = 0.0;
  s.seed = 4;
  const auto [img, gt] = generate_phantom(s);
  for (std::size_t v = 0; v < gt.data().size(); ++v) {
    const Label l = gt.data()[v];
    const int k = l == 0 ? 0 : s.hierarchy.base_index(l) + 1;
    for (int m = 0; m < s.modalities; ++m) CHECK(img.channel(m)[v] == static_cast<float>(s.intensity_mean[k][m]));
  }
}

TEST_CASE("phantom: deterministic given seed") {
  PhantomSpec s;
  s.seed = 99;
  const auto a = generate_phantom(s), b = generate_phantom(s);
  CHECK(std::equal(a.first.data().begin(), a.first.data().end(), b.first.data().begin()));
  CHECK(a.second == b.second);
  s.seed = 100;
  CHECK_FALSE(generate_phantom(s).second == a.second);
}

TEST_CASE("phantom: 100 seeds all nest and contain every class") {
  PhantomSpec s;
  for (int i = 0; i < 100; ++i) {
    s.seed = derive_seed(1, i);
    const auto [img, gt] = generate_phantom(s);
    const auto oh = one_hot(gt);
    CHECK(satisfies_nesting(oh));
    for (int c = 0; c < 3; ++c) CHECK(oh.count(c) > 0);
  }
  auto card = PhantomSpec::cardiac();
  card.seed = 3;
  const auto [ci, cg] = generate_phantom(card);
  const auto oh = one_hot(cg);
  for (int c = 0; c < 3; ++c) CHECK(oh.count(c) > 0);
}

TEST_CASE("phantom: radii that cannot nest are rejected") {
  PhantomSpec s;
  s.radii = {{5, 8}, {6, 7}, {1, 2}};
  CHECK_THROWS_AS(s.validate(), Error);
  s.radii = {{5, 8}, {2, 3}};
  CHECK_THROWS_AS(s.validate(), Error);
  const auto j = nlohmann::json::parse(R"({"hierarchy":"brats","radii":[[8,10],[4,9],[1,2]]})");
  CHECK_THROWS_AS(phantom_spec_from_json(j), Error);
  const nlohmann::json round = PhantomSpec{};
  CHECK(phantom_spec_from_json(round).radii.size() == 3);
}

TEST_CASE("seggen: identity path and pure translation") {
  PhantomSpec s;
  s.seed = 5;
  const auto [img, gt] = generate_phantom(s);
  SegGenParams p;
  p.per_transform_probability = 0.0;
  for (int i = 0; i < 5; ++i) CHECK(seggen_degrade(gt, p, i) == gt);

  const Grid g{16, 16, 16};
  std::vector<Label> d(g.voxels(), 0);
  d[g.index(3, 7, 9)] = 3;
  const LabelMask one(g, d, ClassHierarchy::brats());
  SegGenTransform t;
  t.translation = std::array<double, 3>{5, 0, 0};
  const auto moved = apply_transform(one, t);
  CHECK(moved.at(8, 7, 9) == 3);
  CHECK(std::count(moved.data().begin(), moved.data().end(), Label{3}) == 1);
}

TEST_CASE("seggen: labels stay valid; dsc 1 only on identity") {
  PhantomSpec s;
  s.seed = 6;
  const auto [img, gt] = generate_phantom(s);
  SegGenParams p;
  Rng rng(3);
  std::set<int> bins;
  for (int i = 0; i < 200; ++i) {
    Rng r(derive_seed(8, i));
    const auto t = sample_transform(p, r);
    const auto out = apply_transform(gt, t);
    CHECK(std::all_of(out.data().begin(), out.data().end(), [&](Label l) { return gt.hierarchy().is_declared(l); }));
    const double dsc = metrics::multiclass_dsc(out, gt);
    if (t.identity()) CHECK(dsc == 1.0);
    bins.insert(quality_bin(dsc));
  }
  MESSAGE("bins spanned by 200 degradations: " << bins.size());
  CHECK(bins.size() >= 5);
}

TEST_CASE("seggen params json") {
  const auto p = nlohmann::json::parse(R"({"scale":[0.9,1.1],"per_transform_probability":1.0})").get<SegGenParams>();
  CHECK(p.scale.hi == 1.1);
  CHECK(p.rotation_deg.lo == -15.0);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"scale":[1.2,1.1]})").get<SegGenParams>(), Error);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"per_transform_probability":2})").get<SegGenParams>(), Error);
}

namespace {
std::vector<QualityRecord> records_with_counts(const std::vector<int>& counts) {
  std::vector<QualityRecord> r;
  for (int b = 0; b < static_cast<int>(counts.size()); ++b)
    for (int i = 0; i < counts[b]; ++i)
      r.push_back({"s" + std::to_string(b) + "_" + std::to_string(i), (b + (i + 0.5) / (counts[b] + 1.0)) / 10.0});
  return r;
}
}  // namespace

TEST_CASE("balanced index: bin edges") {
  CHECK(quality_bin(0.0) == 0);
  CHECK(quality_bin(0.0999) == 0);
  CHECK(quality_bin(0.1) == 1);
  CHECK(quality_bin(0.95) == 9);
  CHECK(quality_bin(1.0) == 9);
  CHECK_THROWS_AS(quality_bin(1.01), Error);
}

TEST_CASE("balanced index: deterministic mode") {
  const auto even = build_balanced_index(records_with_counts(std::vector<int>(10, 3)), 10, BalanceMode::kDeterministic, 1);
  CHECK(even.n_s == 3);
  CHECK(even.selected.size() == 30);
  const auto recs = records_with_counts({100, 3, 5, 7, 9, 11, 4, 6, 8, 10});
  const auto idx = build_balanced_index(recs, 10, BalanceMode::kDeterministic, 42);
  CHECK(idx.n_s == 3);
  std::vector<int> per_bin(10, 0);
  std::set<std::string> uniq(idx.selected.begin(), idx.selected.end());
  CHECK(uniq.size() == idx.selected.size());
  for (const auto& id : idx.selected)
    for (const auto& r : recs)
      if (r.seg_id == id) ++per_bin[quality_bin(r.dsc)];
  for (int c : per_bin) CHECK(c == 3);
  const auto again = build_balanced_index(recs, 10, BalanceMode::kDeterministic, 42);
  CHECK(again.selected == idx.selected);
  const nlohmann::json j = idx;
  CHECK(j.dump() == nlohmann::json(again).dump());
  CHECK(j.get<BalancedIndex>().selected == idx.selected);
}

TEST_CASE("balanced index: empty bin is named") {
  try {
    build_balanced_index(records_with_counts({3, 3, 3, 0, 3, 3, 3, 3, 3, 3}), 10, BalanceMode::kDeterministic, 1);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDataError);
    CHECK(std::string(e.what()).find("bin 3") != std::string::npos);
  }
}

TEST_CASE("balanced sampler frequencies are uniform within bins") {
  const std::vector<int> counts{20, 3, 5, 7, 9, 11, 4, 6, 8, 10};
  const auto recs = records_with_counts(counts);
  const auto idx = build_balanced_index(recs, 10, BalanceMode::kStochastic, 7);
  BalancedSampler sampler(idx, 11);
  std::vector<int> hits(recs.size(), 0);
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const auto pick = sampler.draw();
    CHECK(pick.size() == 30);
    std::set<std::size_t> uniq(pick.begin(), pick.end());
    REQUIRE(uniq.size() == pick.size());
    for (std::size_t i : pick) ++hits[i];
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const int n = counts[quality_bin(recs[i].dsc)];
    const double p = 3.0 / n;
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(hits[i] - draws * p) <= 3.0 * sigma + 1e-9);
  }
}

TEST_CASE("dataset synthesis is reproducible and snapshots have the right cardinality") {
  const auto dir_a = std::filesystem::temp_directory_path() / "segqc_ds_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "segqc_ds_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  PhantomSpec s;
  s.grid = {16, 16, 16};
  s.radii = {{4, 6}, {2.5, 3.5}, {1, 2}};
  auto ma = synthesize_dataset(s, dir_a, 2, 7);
  auto mb = synthesize_dataset(s, dir_b, 2, 7, 2);
  CHECK(io::read_text(dir_a / "manifest.json") ==
        io::read_text(dir_b / "manifest.json"));
  CHECK(ma.missing_files().empty());
  DegradeOptions opt;
  opt.seggen.applications_per_gt = 2;
  opt.snapshot_epochs = {0, 1};
  opt.proxy.base_filters = 2;
  opt.proxy.depth = 2;
  opt.seed = 3;
  degrade_dataset(ma, opt);
  const auto back = DatasetManifest::load(dir_a);
  REQUIRE(back.cases.size() == 2);
  CHECK(back.cases[0].segs.size() == 4);
  CHECK(back.missing_files().empty());
  for (const auto& c : back.cases)
    for (const auto& seg : c.segs) {
      const auto q = metrics::quality(back.load_seg(seg), back.load_gt(c));
      CHECK(q.dsc == doctest::Approx(seg.dsc));
      CHECK(std::filesystem::exists(dir_a / seg_meta_path(seg.path)));
    }
  std::filesystem::remove(dir_a / back.cases[0].gt);
  CHECK(back.missing_files().size() == 1);

  proxyseg::ProxySegmenter seg({.modalities = 2, .base_filters = 2, .depth = 2}, ClassHierarchy::brats(), 1);
  const auto img = back.load_image(back.cases[1]);
  const auto gt = back.load_gt(back.cases[1]);
  const auto one = snapshot_segmentations(seg, {{&img, &gt}}, {2}, 1e-3, 1);
  CHECK(one.size() == 1);
  CHECK_THROWS_AS(snapshot_segmentations(seg, {{&img, &gt}}, {}, 1e-3, 1), Error);
}
