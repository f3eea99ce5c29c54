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

#include <json.hpp>

#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"
#include "segqc/util/rng.hpp"

namespace segqc::engine {

/// Training-time augmentation. Each transform fires independently with its
/// probability.
struct AugmentConfig {
  bool enabled = true;
  double rotation_p = 0.2;
  double rotation_deg = 15.0;  // symmetric, per axis
  double scale_p = 0.2;
  double scale_lo = 0.85;
  double scale_hi = 1.25;
  double mirror_p = 0.5;  // per axis
  double noise_p = 0.15;
  double noise_std_max = 0.1;  // relative to the channel's std
  double gamma_p = 0.3;
  double gamma_lo = 0.7;
  double gamma_hi = 1.5;

  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

/// Shared spatial transform: output voxel q reads input position
/// A (q' - c) + c, where q' is q after the mirror flips and c the grid centre.
struct GeometricTransform {
  std::array<std::array<double, 3>, 3> matrix{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::array<bool, 3> mirror{false, false, false};

  [[nodiscard]] bool identity() const noexcept;
};

GeometricTransform sample_geometric(const AugmentConfig& cfg, Rng& rng);

/// Nearest-neighbour resampling; positions outside the grid read background.
LabelMask apply_geometric(const LabelMask& mask, const GeometricTransform& t);
/// Trilinear resampling with edge clamping.
Volume apply_geometric(const Volume& image, const GeometricTransform& t);

/// Gaussian noise and gamma correction on each image channel.
Volume apply_intensity(const Volume& image, const AugmentConfig& cfg, Rng& rng);

struct AugmentedTriple {
  Volume image;
  LabelMask query;
  LabelMask gt;
};

/// One shared geometric transform for image, query and ground truth, then
/// intensity transforms on the image.
AugmentedTriple augment(const Volume& image, const LabelMask& query, const LabelMask& gt,
                        const AugmentConfig& cfg, Rng& rng);

}  // namespace segqc::engine
