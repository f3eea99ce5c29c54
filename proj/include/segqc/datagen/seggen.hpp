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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "segqc/core/masks.hpp"
#include "segqc/datagen/phantom.hpp"
#include "segqc/util/rng.hpp"

namespace segqc::datagen {

struct SegGenParams {
  Interval rotation_deg{-15.0, 15.0};
  Interval scale{0.85, 1.25};
  Interval translation_vox{-20.0, 20.0};
  Interval deform_displacement_vox{-20.0, 20.0};
  double per_transform_probability = 0.5;
  int applications_per_gt = 3;
  // Control points per axis of the elastic displacement grid.
  int control_points = 4;

  void validate() const;
};

void to_json(nlohmann::json& j, const SegGenParams& p);
void from_json(const nlohmann::json& j, SegGenParams& p);

/// One sampled SegGen transform; absent members were skipped.
struct SegGenTransform {
  std::optional<std::array<double, 3>> rotation_deg;  // about axes 0, 1, 2
  std::optional<double> scale;
  std::optional<std::array<double, 3>> translation;
  // control_points^3 displacement vectors, (cz, cy, cx, axis) row-major.
  std::optional<std::vector<double>> displacement;
  int control_points = 4;

  [[nodiscard]] bool identity() const noexcept {
    return !rotation_deg && !scale && !translation && !displacement;
  }
};

SegGenTransform sample_transform(const SegGenParams& params, Rng& rng);

/// Resamples `mask` under `t` with nearest-neighbour lookup. All parts are
/// composed into one backward mapping about the grid centre: rotation, then
/// scaling, then translation, then the elastic displacement.
LabelMask apply_transform(const LabelMask& mask, const SegGenTransform& t);

LabelMask seggen_degrade(const LabelMask& gt, const SegGenParams& params, std::uint64_t seed);

}  // namespace segqc::datagen
