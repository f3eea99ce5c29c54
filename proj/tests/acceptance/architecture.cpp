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

// Output contracts of both downsampling presets on desk-scale volumes.
#include <cmath>
#include <random>

#include "common.hpp"
#include "segqc/model/qcresunet.hpp"
#include "support/model_oracles.hpp"
#include "support/oracles.hpp"

namespace acceptance {

namespace {

struct Contract {
  bool ok = true;
  std::string detail;
};

Contract check_preset(const std::string& name, const segqc::model::QCResUNetConfig& cfg, segqc::Grid grid,
                      const std::array<segqc::nn::Stride3, 4>& rates, const segqc::ClassHierarchy& h,
                      std::mt19937_64& rng) {
  using namespace segqc;
  Contract out;
  const model::QCResUNet net(cfg, 31);
  std::normal_distribution<float> n01;
  std::vector<float> v(static_cast<std::size_t>(cfg.modalities) * grid.voxels());
  for (auto& x : v) x = n01(rng);
  const Volume image(grid, std::move(v));
  const auto query = oracle::blob_mask(grid, h, rng);
  const auto p = net.predict(image, query);
  std::size_t bad = 0;
  for (float x : p.sem_prob) bad += !(std::isfinite(x) && x >= 0.0f && x <= 1.0f);
  const bool scores_ok = p.dsc_pred >= 0.0 && p.dsc_pred <= 1.0 && p.nsd_pred >= 0.0 && p.nsd_pred <= 1.0;
  const bool shape_ok = p.grid == grid && p.sem_prob.size() == static_cast<std::size_t>(h.num_classes()) * grid.voxels();
  const std::size_t expected = oracle::encoder_params_formula(cfg.in_channels(), cfg.base_filters, {3, 4, 6, 3}, true);
  const bool count_ok = net.encoder_parameter_count() == expected;
  const bool rates_ok = cfg.downsample_rates == rates;
  out.ok = scores_ok && shape_ok && count_ok && rates_ok && bad == 0;
  out.detail = name + " " + std::to_string(grid.d) + "x" + std::to_string(grid.h) + "x" + std::to_string(grid.w) +
               (rates_ok ? "" : " WRONG RATES") + (shape_ok ? " sem ok" : " sem SHAPE MISMATCH") + ", scores (" + num(p.dsc_pred) + ", " + num(p.nsd_pred) +
               "), " + std::to_string(bad) + " out-of-range sem values, encoder params " +
               std::to_string(net.encoder_parameter_count()) + (count_ok ? " = " : " != ") + std::to_string(expected);
  return out;
}

}  // namespace

Outcome architecture_contracts() {
  using namespace segqc;
  std::mt19937_64 rng(3);
  constexpr nn::Stride3 iso{2, 2, 2}, planar{1, 2, 2};
  const auto brain = check_preset("brain", model::QCResUNetConfig::brain(4, 3, 8), {64, 64, 64},
                                  {iso, iso, iso, iso}, ClassHierarchy::brats(), rng);
  const auto cardiac = check_preset("cardiac", model::QCResUNetConfig::cardiac(1, 3, 8), {16, 64, 64},
                                    {planar, planar, planar, iso}, ClassHierarchy::cardiac(), rng);
  return {brain.ok && cardiac.ok, brain.detail + "; " + cardiac.detail};
}

}  // namespace acceptance
