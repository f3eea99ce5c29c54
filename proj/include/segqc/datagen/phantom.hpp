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

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "segqc/core/hierarchy.hpp"
#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"

namespace segqc::datagen {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Synthetic image/mask generator settings. Chain hierarchies produce nested
/// lumpy ellipsoids (class c+1 inside class c); antichains produce adjacent
/// non-overlapping ellipsoids.
struct PhantomSpec {
  Grid grid{32, 32, 32};
  int modalities = 2;
  ClassHierarchy hierarchy = ClassHierarchy::brats();
  // Per derived class, outermost first, in voxels.
  std::vector<Interval> radii{{7.0, 10.0}, {4.0, 6.0}, {1.5, 3.0}};
  // Relative amplitude of the direction-dependent radius modulation.
  double lumpiness = 0.2;
  // Maximum centre offset from the grid centre, in voxels.
  double center_jitter = 4.0;
  // [label index][modality]; label index 0 is background, then base labels in order.
  std::vector<std::vector<double>> intensity_mean{{0.2, 0.2}, {0.35, 0.65}, {0.5, 0.85}, {0.9, 0.7}};
  std::vector<std::vector<double>> intensity_std{{0.03, 0.03}, {0.05, 0.05}, {0.05, 0.05}, {0.05, 0.05}};
  double noise_std = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
  static PhantomSpec cardiac();
};

void to_json(nlohmann::json& j, const PhantomSpec& s);
/// Accepts "hierarchy" as a preset name ("brats", "cardiac", "binary") or a full object.
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

std::pair<Volume, LabelMask> generate_phantom(const PhantomSpec& spec);

}  // namespace segqc::datagen
