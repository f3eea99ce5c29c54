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
#include <random>

#include "segqc/losses/losses.hpp"
#include "segqc/util/error.hpp"
#include "support/loss_oracles.hpp"

using namespace segqc;
using namespace segqc::losses;

using namespace oracle;


TEST_CASE("mae loss examples") {
  const std::vector<double> p{0.5}, g{0.3}, pn{0.6}, gn{0.5};
  CHECK(mae_loss({p, pn}, {g, gn}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(mae_loss({p, pn}, {p, pn}) == 0.0);
  const std::vector<double> two{0.1, 0.2};
  CHECK_THROWS_AS(mae_loss({p, pn}, {two, two}), Error);
}

TEST_CASE("dice loss examples") {
  LossConfig cfg;
  std::vector<double> g(2 * 8, 0.0);
  for (int i = 0; i < 16; i += 3) g[i] = 1.0;
  g[8] = 1.0;
  const SemView gv{g, 1, 2};
  CHECK(dice_loss(gv, gv, cfg) == doctest::Approx(-1.0).epsilon(1e-5));
  const std::vector<double> zero(16, 0.0);
  CHECK(dice_loss({zero, 1, 2}, gv, cfg) == 0.0);
  CHECK_THROWS_AS(dice_loss({zero, 1, 2}, {g, 2, 1}, cfg), Error);
}

TEST_CASE("ce loss examples") {
  LossConfig cfg;
  const std::vector<double> ones(8, 1.0), near(8, 1.0 - cfg.epsilon), zeros(8, 0.0), half(8, 0.5);
  CHECK(ce_loss({near, 1, 1}, {ones, 1, 1}, cfg) == doctest::Approx(0.0).epsilon(1e-4).scale(1));
  CHECK(ce_loss({half, 1, 1}, {zeros, 1, 1}, cfg) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("losses match formula recomputation in all modes") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 10; ++t) {
    const auto b = random_batch(rng, 1 + t % 4, 1 + t % 3, 64);
    for (auto dn : {DiceNormalization::kPerClassMean, DiceNormalization::kLiteralOneOverV})
      for (auto cf : {CeForm::kFullBinary, CeForm::kLiteralPositiveOnly}) {
        LossConfig cfg;
        cfg.dice_normalization = dn;
        cfg.ce_form = cf;
        cfg.lambda_balance = 0.5 + t * 0.1;
        const double m = mae_loss({b.dsc, b.nsd}, {b.gdsc, b.gnsd});
        const double d = dice_loss(view(b.prob, b), view(b.gt, b), cfg);
        const double c = ce_loss(view(b.prob, b), view(b.gt, b), cfg);
        CHECK(std::abs(m - ref_mae(b)) <= 1e-9);
        CHECK(std::abs(d - ref_dice(b, b.prob, dn, cfg.epsilon)) <= 1e-9);
        CHECK(std::abs(c - ref_ce(b, b.prob, cf, cfg.epsilon)) <= 1e-9);
        const auto all = combined_loss({b.dsc, b.nsd}, view(b.prob, b), {b.gdsc, b.gnsd}, view(b.gt, b), cfg);
        CHECK(std::abs(all.total - (m + cfg.lambda_balance * (d + c))) <= 1e-9);
        CHECK(all.mae == m);
        CHECK(all.dice == d);
        CHECK(all.ce == c);
        CHECK(m >= 0.0);
        CHECK(c >= 0.0);
        if (dn == DiceNormalization::kPerClassMean) {
          CHECK(d <= 0.0);
          CHECK(d >= -1.0);
        }
      }
  }
}

TEST_CASE("lambda zero reduces to mae; regression gradient independent of lambda") {
  std::mt19937_64 rng(5);
  const auto b = random_batch(rng, 3, 2, 32);
  LossConfig cfg;
  cfg.lambda_balance = 0.0;
  CombinedGrad g0, g1;
  const auto l0 = combined_loss({b.dsc, b.nsd}, view(b.prob, b), {b.gdsc, b.gnsd}, view(b.gt, b), cfg, &g0);
  CHECK(l0.total == mae_loss({b.dsc, b.nsd}, {b.gdsc, b.gnsd}));
  cfg.lambda_balance = 3.0;
  combined_loss({b.dsc, b.nsd}, view(b.prob, b), {b.gdsc, b.gnsd}, view(b.gt, b), cfg, &g1);
  CHECK(g0.dsc == g1.dsc);
  CHECK(g0.nsd == g1.nsd);
  for (double v : g0.sem) CHECK(v == 0.0);
}

TEST_CASE("combined loss gradient matches central differences") {
  std::mt19937_64 rng(77);
  const double h = 1e-6;
  for (int t = 0; t < 10; ++t) {
    auto b = random_batch(rng, 1 + t % 3, 1 + t % 3, 27);
    for (auto cf : {CeForm::kFullBinary, CeForm::kLiteralPositiveOnly}) {
      LossConfig cfg;
      cfg.ce_form = cf;
      cfg.lambda_balance = 0.7;
      CombinedGrad g;
      auto eval = [&] {
        return combined_loss({b.dsc, b.nsd}, view(b.prob, b), {b.gdsc, b.gnsd}, view(b.gt, b), cfg).total;
      };
      combined_loss({b.dsc, b.nsd}, view(b.prob, b), {b.gdsc, b.gnsd}, view(b.gt, b), cfg, &g);
      auto check = [&](std::vector<double>& x, const std::vector<double>& analytic) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double keep = x[i];
          x[i] = keep + h;
          const double up = eval();
          x[i] = keep - h;
          const double dn = eval();
          x[i] = keep;
          const double fd = (up - dn) / (2 * h);
          const double rel = std::abs(fd - analytic[i]) / std::max(1e-6, std::max(std::abs(fd), std::abs(analytic[i])));
          CHECK(rel <= 1e-4);
        }
      };
      check(b.dsc, g.dsc);
      check(b.nsd, g.nsd);
      check(b.prob, g.sem);
    }
  }
}

TEST_CASE("loss config validation and json") {
  LossConfig c;
  c.lambda_balance = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c.lambda_balance = 1;
  c.epsilon = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  LossConfig d;
  d.dice_normalization = DiceNormalization::kLiteralOneOverV;
  d.ce_form = CeForm::kLiteralPositiveOnly;
  const nlohmann::json j = d;
  CHECK(j["dice_normalization"] == "literal_1_over_V");
  const auto e = j.get<LossConfig>();
  CHECK(e.ce_form == CeForm::kLiteralPositiveOnly);
  CHECK_THROWS_AS((nlohmann::json{{"ce_form", "bogus"}}.get<LossConfig>()), Error);
}
