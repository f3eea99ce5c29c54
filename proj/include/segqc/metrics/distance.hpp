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
#include <span>
#include <vector>

#include "segqc/core/grid.hpp"

namespace segqc::metrics {

/// Exact squared Euclidean distance from every voxel to the nearest voxel
/// with `features[v] != 0`, in physical units given by `spacing`.
/// Voxels are +inf when the feature set is empty.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> features, Grid grid,
                                               Spacing spacing = kUnitSpacing);

/// Foreground voxels with at least one 6-connected background neighbour;
/// voxels on the volume faces count as touching background.
std::vector<std::uint8_t> boundary(std::span<const std::uint8_t> mask, Grid grid);

}  // namespace segqc::metrics
