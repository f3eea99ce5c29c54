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

#include <algorithm>
#include <filesystem>

#include "segqc/datagen/dataset.hpp"
#include "segqc/datagen/phantom.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/proxyseg/proxyseg.hpp"
#include "segqc/util/error.hpp"

using namespace segqc;
using namespace segqc::proxyseg;

namespace {
std::pair<Volume, LabelMask> small_phantom(std::uint64_t seed) {
  datagen::PhantomSpec s;
  s.grid = {16, 16, 16};
  s.radii = {{5, 6.5}, {3, 4}, {1.5, 2.5}};
  s.center_jitter = 1.5;
  s.seed = seed;
  return datagen::generate_phantom(s);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

TEST_CASE("segment: shape contract and simplex") {
  const auto [img, gt] = small_phantom(1);
  ProxySegmenter seg({.modalities = 2, .base_filters = 4}, ClassHierarchy::brats(), 3);
  const auto p = seg.segment(img);
  const std::size_t n = img.grid().voxels();
  REQUIRE(p.size() == 4 * n);
  Rng rng(5);
  const auto q = seg.segment(img, &rng);
  for (std::size_t v = 0; v < n; ++v) {
    double s = 0.0, t = 0.0;
    for (int k = 0; k < 4; ++k) {
      s += p[k * n + v];
      t += q[k * n + v];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(t == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("segment: indivisible shape reports padding") {
  ProxySegmenter seg({.modalities = 1, .base_filters = 2, .depth = 3}, ClassHierarchy::binary(), 1);
  try {
    seg.check_input({16, 18, 16});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDataError);
    CHECK(std::string(e.what()).find("pad") != std::string::npos);
  }
  CHECK_THROWS_AS(ProxySegConfig{.dropout_p = 1.0f}.validate(), Error);
  CHECK_THROWS_AS(ProxySegConfig{.depth = 1}.validate(), Error);
}

TEST_CASE("segment: overfits one phantom") {
  const auto [img, gt] = small_phantom(2);
  ProxySegmenter seg({.modalities = 2, .base_filters = 8}, ClassHierarchy::brats(), 4);
  TrainOptions opt;
  opt.epochs = 200;
  opt.lr = 3e-3;
  opt.seed = 9;
  seg.train({{&img, &gt}}, opt);
  const double dsc = metrics::multiclass_dsc(seg.predict_mask(img), gt);
  MESSAGE("overfit dsc " << dsc);
  CHECK(dsc >= 0.9);
}

TEST_CASE("mc dropout: record-and-average oracle") {
  const auto [img, gt] = small_phantom(3);
  ProxySegmenter seg({.modalities = 2, .base_filters = 4}, ClassHierarchy::brats(), 5);
  const auto one = seg.mc_dropout_umap(img, 1, 77);
  Rng r1(77);
  CHECK(one == seg.segment(img, &r1));

  const auto four = seg.mc_dropout_umap(img, 4, 78);
  Rng r4(78);
  std::vector<double> acc(four.size(), 0.0);
  for (int t = 0; t < 4; ++t) {
    const auto p = seg.segment(img, &r4);
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += p[i];
  }
  const std::size_t n = img.grid().voxels();
  for (std::size_t i = 0; i < four.size(); ++i) CHECK(four[i] == doctest::Approx(acc[i] / 4).epsilon(1e-6));
  for (std::size_t v = 0; v < n; ++v) {
    double s = 0;
    for (int k = 0; k < 4; ++k) s += four[k * n + v];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  }
  CHECK(seg.mc_dropout_umap(img, 3, 1) == seg.mc_dropout_umap(img, 3, 1));
  CHECK_THROWS_AS(seg.mc_dropout_umap(img, 0, 1), Error);

  // Without a dropout stream every pass is the deterministic softmax.
  CHECK(seg.segment(img) == seg.segment(img));
}

TEST_CASE("class probabilities and argmax decoding") {
  const auto h = ClassHierarchy::brats();
  const Grid g{1, 1, 2};
  // voxel 0: ED wins; voxel 1: background wins.
  const std::vector<float> p{0.1f, 0.6f, 0.2f, 0.3f, 0.5f, 0.05f, 0.2f, 0.05f};
  const auto mask = argmax_mask(p, h, g);
  CHECK(mask.data()[0] == 2);
  CHECK(mask.data()[1] == 0);
  const auto c = class_probabilities(p, h, g);
  // WT = NCR+ED+ET, TC = NCR+ET, ET.
  CHECK(c[0] == doctest::Approx(0.9));
  CHECK(c[2] == doctest::Approx(0.4));
  CHECK(c[4] == doctest::Approx(0.2));
}

TEST_CASE("checkpoint round trip") {
  const auto [img, gt] = small_phantom(4);
  ProxySegmenter seg({.modalities = 2, .base_filters = 4}, ClassHierarchy::brats(), 6);
  const auto dir = std::filesystem::temp_directory_path() / "segqc_proxy_ckpt";
  std::filesystem::remove_all(dir);
  seg.save(dir);
  const auto back = ProxySegmenter::load(dir);
  CHECK(back.hierarchy() == seg.hierarchy());
  CHECK(back.segment(img) == seg.segment(img));
}

TEST_CASE("snapshots: untrained is poor and training improves the median") {
  std::vector<std::pair<Volume, LabelMask>> data;
  for (int i = 0; i < 3; ++i) data.push_back(small_phantom(20 + i));
  std::vector<Example> ex;
  for (auto& [im, gt] : data) ex.push_back({&im, &gt});
  ProxySegmenter seg({.modalities = 2, .base_filters = 4}, ClassHierarchy::brats(), 7);
  const auto snaps = datagen::snapshot_segmentations(seg, ex, {0, 15}, 2e-3, 1);
  REQUIRE(snaps.size() == 6);
  std::vector<double> first, last;
  for (const auto& s : snaps) {
    const double d = metrics::multiclass_dsc(s.mask, *ex[s.case_index].gt);
    (s.epoch == 0 ? first : last).push_back(d);
  }
  double mean0 = 0;
  for (double d : first) mean0 += d / first.size();
  MESSAGE("epoch-0 mean " << mean0 << ", final median " << median(last));
  CHECK(mean0 < 0.3);
  CHECK(median(last) >= median(first));

  ProxySegmenter again({.modalities = 2, .base_filters = 4}, ClassHierarchy::brats(), 7);
  const auto rerun = datagen::snapshot_segmentations(again, ex, {0, 15}, 2e-3, 1);
  for (std::size_t i = 0; i < snaps.size(); ++i) CHECK(rerun[i].mask == snaps[i].mask);
}
