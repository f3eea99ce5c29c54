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

#include <random>

#include "segqc/core/encoding.hpp"
#include "segqc/metrics/distance.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/util/error.hpp"
#include "support/oracles.hpp"

using namespace segqc;
using namespace segqc::metrics;

namespace {
constexpr Label kNCR = 1, kED = 2;

std::vector<std::uint8_t> to_vec(std::span<const std::uint8_t> s) { return {s.begin(), s.end()}; }
}  // namespace

TEST_CASE("multiclass dsc examples") {
  const auto h = ClassHierarchy::brats();
  const Grid g{1, 1, 6};
  const LabelMask gt(g, {kNCR, kNCR, kNCR, kNCR, 0, 0}, h);
  CHECK(multiclass_dsc(gt, gt) == 1.0);
  CHECK(multiclass_dsc(LabelMask::zeros(g, h), gt) == 0.0);
  CHECK(multiclass_dsc(LabelMask::zeros(g, h), LabelMask::zeros(g, h)) == 1.0);
  const LabelMask q(g, {kNCR, kNCR, kED, 0, 0, 0}, h);
  CHECK(multiclass_dsc(q, gt) == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK(multiclass_dsc(q, gt) == oracle::multiclass_dsc(q, gt));
  CHECK_THROWS_AS(multiclass_dsc(q, LabelMask::zeros({1, 1, 5}, h)), Error);
}

TEST_CASE("multiclass dsc: symmetric, bounded, binary special case") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto a = oracle::random_mask({5, 5, 5}, ClassHierarchy::brats(), rng);
    const auto b = oracle::random_mask({5, 5, 5}, ClassHierarchy::brats(), rng);
    const double d = multiclass_dsc(a, b);
    CHECK(d == multiclass_dsc(b, a));
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    const auto p = oracle::random_mask({5, 5, 5}, ClassHierarchy::binary(), rng);
    const auto q = oracle::random_mask({5, 5, 5}, ClassHierarchy::binary(), rng);
    CHECK(multiclass_dsc(p, q) == doctest::Approx(binary_dice(one_hot(p).channel(0), one_hot(q).channel(0))));
  }
}

TEST_CASE("distance transform matches brute force") {
  std::mt19937_64 rng(2);
  const Grid g{5, 6, 7};
  const Spacing sp{1.0, 2.0, 0.5};
  std::bernoulli_distribution b(0.05);
  std::vector<std::uint8_t> f(g.voxels());
  for (auto& v : f) v = b(rng);
  f[3] = 1;
  const auto d2 = squared_distance_transform(f, g, sp);
  for (int z = 0; z < g.d; ++z)
    for (int y = 0; y < g.h; ++y)
      for (int x = 0; x < g.w; ++x) {
        double best = 1e300;
        for (int zz = 0; zz < g.d; ++zz)
          for (int yy = 0; yy < g.h; ++yy)
            for (int xx = 0; xx < g.w; ++xx)
              if (f[g.index(zz, yy, xx)]) {
                const double dz = (z - zz) * sp[0], dy = (y - yy) * sp[1], dx = (x - xx) * sp[2];
                best = std::min(best, dz * dz + dy * dy + dx * dx);
              }
        CHECK(d2[g.index(z, y, x)] == doctest::Approx(best).epsilon(1e-12));
      }
}

TEST_CASE("nsd examples") {
  const Grid g{16, 16, 16};
  std::vector<std::uint8_t> a(g.voxels(), 0), b(g.voxels(), 0);
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        a[g.index(z + 1, y + 1, x + 1)] = 1;
        b[g.index(z + 1, y + 1, x + 13)] = 1;
      }
  CHECK(surface_dice(a, a, g, 1.0) == 1.0);
  CHECK(surface_dice(a, a, g, 0.0) == 1.0);
  CHECK(surface_dice(a, b, g, 1.0) == 0.0);
  std::vector<std::uint8_t> none(g.voxels(), 0);
  CHECK(surface_dice(none, none, g, 1.0) == 1.0);
  CHECK(surface_dice(a, none, g, 1.0) == 0.0);
  CHECK_THROWS_AS(surface_dice(a, a, g, -1.0), Error);
}

TEST_CASE("nsd matches all-pairs oracle; symmetric and monotone in tolerance") {
  std::mt19937_64 rng(4);
  const Grid g{8, 8, 8};
  const auto h = ClassHierarchy::brats();
  for (int t = 0; t < 40; ++t) {
    const auto q = t % 2 ? oracle::blob_mask(g, h, rng) : oracle::random_mask(g, h, rng, 0.6);
    const auto gt = oracle::blob_mask(g, h, rng);
    const auto sq = one_hot(q), sg = one_hot(gt);
    double prev = -1.0;
    for (double tol : {0.0, 1.0, 1.5, 2.5, 20.0}) {
      const auto per = per_class_nsd(sq, sg, tol);
      const auto rev = per_class_nsd(sg, sq, tol);
      double mean = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double o = oracle::surface_dice(to_vec(sq.channel(c)), to_vec(sg.channel(c)), g, tol);
        CHECK(std::abs(per[c] - o) <= 1e-9);
        CHECK(per[c] == rev[c]);
        mean += per[c] / 3.0;
      }
      CHECK(nsd(sq, sg, tol) == doctest::Approx(mean).epsilon(1e-14));
      CHECK(mean >= prev);
      prev = mean;
      if (tol == 20.0) {
        for (int c = 0; c < 3; ++c) {
          const bool any_q = sq.count(c) > 0, any_g = sg.count(c) > 0;
          if (any_q == any_g) CHECK(per[c] == 1.0);
        }
      }
    }
  }
}

TEST_CASE("nsd with anisotropic spacing matches oracle") {
  std::mt19937_64 rng(8);
  const Grid g{6, 8, 8};
  const Spacing sp{2.0, 1.0, 0.7};
  for (int t = 0; t < 10; ++t) {
    const auto q = oracle::blob_mask(g, ClassHierarchy::binary(), rng);
    const auto gt = oracle::blob_mask(g, ClassHierarchy::binary(), rng);
    const auto a = to_vec(one_hot(q).channel(0)), b = to_vec(one_hot(gt).channel(0));
    CHECK(std::abs(surface_dice(a, b, g, 1.5, sp) - oracle::surface_dice(a, b, g, 1.5, sp)) <= 1e-9);
  }
}

TEST_CASE("sem ground truth") {
  std::mt19937_64 rng(6);
  const Grid g{4, 4, 4};
  const auto h = ClassHierarchy::brats();
  const auto gt = oracle::random_mask(g, h, rng);
  const auto same = sem_ground_truth(gt, gt);
  for (int c = 0; c < 3; ++c) CHECK(same.count(c) == 0);
  CHECK(to_vec(sem_ground_truth(LabelMask::zeros(g, h), gt).data()) == to_vec(one_hot(gt).data()));
  for (int t = 0; t < 20; ++t) {
    const auto q = oracle::random_mask(g, h, rng);
    const auto s = sem_ground_truth(q, gt);
    const auto oq = one_hot(q), og = one_hot(gt);
    for (int c = 0; c < 3; ++c) {
      CHECK(to_vec(s.channel(c)) == oracle::sem_channel(q, gt, c));
      CHECK((s.count(c) == 0) == (to_vec(oq.channel(c)) == to_vec(og.channel(c))));
    }
  }
}

TEST_CASE("dsc_sem and ue_overlap against set oracle") {
  std::mt19937_64 rng(7);
  const Grid g{6, 6, 6};
  const auto h = ClassHierarchy::brats();
  std::bernoulli_distribution b(0.3);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::uint8_t> p(3 * g.voxels()), q(3 * g.voxels());
    for (auto& v : p) v = b(rng);
    for (auto& v : q) v = b(rng);
    if (t == 0) std::fill(p.begin(), p.begin() + g.voxels(), 0);
    if (t == 0) std::fill(q.begin(), q.begin() + g.voxels(), 0);
    const SEMStack sp(g, p, h), sq(g, q, h);
    const auto r = dsc_sem(sp, sq);
    double mean = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double o = oracle::set_dice(oracle::voxel_set(to_vec(sp.channel(c))), oracle::voxel_set(to_vec(sq.channel(c))));
      CHECK(r.per_class[c] == o);
      CHECK(dsc_sem(sq, sp).per_class[c] == o);
      CHECK(ue_overlap(sp.channel(c), sq.channel(c)) == o);
      mean += o / 3.0;
    }
    CHECK(r.mean == doctest::Approx(mean).epsilon(1e-15));
  }
  std::vector<std::uint8_t> full(g.voxels(), 1), empty(g.voxels(), 0), half(g.voxels(), 0);
  for (std::size_t i = 0; i < half.size(); i += 2) half[i] = 1;
  std::vector<std::uint8_t> other(g.voxels(), 0);
  for (std::size_t i = 1; i < other.size(); i += 2) other[i] = 1;
  CHECK(ue_overlap(full, full) == 1.0);
  CHECK(ue_overlap(half, other) == 0.0);
  CHECK(ue_overlap(empty, empty) == 1.0);
  CHECK(binary_dice(empty, full) == 0.0);
}

TEST_CASE("pearson and mae") {
  const std::vector<double> gt{0.2, 0.5, 0.7};
  const std::vector<double> pred{0.1, 0.4, 0.8};
  const auto m = mae(pred, gt);
  CHECK(m.mean == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(m.std == doctest::Approx(0.0).epsilon(1e-12));
  // definition formula
  const double mx = (0.1 + 0.4 + 0.8) / 3, my = (0.2 + 0.5 + 0.7) / 3;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (pred[i] - mx) * (gt[i] - my);
    sxx += (pred[i] - mx) * (pred[i] - mx);
    syy += (gt[i] - my) * (gt[i] - my);
  }
  CHECK(pearson_r(pred, gt) == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
  CHECK(pearson_r(gt, gt) == doctest::Approx(1.0));
  std::vector<double> neg;
  for (double v : gt) neg.push_back(1.0 - v);
  CHECK(pearson_r(neg, gt) == doctest::Approx(-1.0));
  const auto z = mae(gt, gt);
  CHECK(z.mean == 0.0);
  CHECK(z.std == 0.0);
  std::vector<double> aff;
  for (double v : pred) aff.push_back(3.0 * v + 2.0);
  CHECK(pearson_r(aff, gt) == doctest::Approx(pearson_r(pred, gt)).epsilon(1e-12));
  const std::vector<double> flat{0.5, 0.5, 0.5};
  try {
    pearson_r(flat, gt);
    FAIL("constant input must be rejected");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumericalFailure);
  }
  CHECK_THROWS_AS(pearson_r(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(mae(flat, std::vector<double>{1.0}), Error);
}
