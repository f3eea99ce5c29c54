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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "segqc/core/grid.hpp"

namespace segqc {

/// Multi-modality image, stored channel-major as (m, D, H, W).
class Volume {
 public:
  Volume(Grid grid, std::vector<float> data, Spacing spacing = kUnitSpacing,
         std::vector<std::string> modality_names = {});

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] int channels() const noexcept { return channels_; }
  [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
  [[nodiscard]] const std::vector<std::string>& modality_names() const noexcept { return names_; }
  [[nodiscard]] std::span<const float> data() const noexcept { return data_; }
  [[nodiscard]] std::span<const float> channel(int m) const noexcept {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(m) * grid_.voxels(),
                                                 grid_.voxels());
  }
  [[nodiscard]] float at(int m, int z, int y, int x) const noexcept {
    return data_[static_cast<std::size_t>(m) * grid_.voxels() + grid_.index(z, y, x)];
  }

 private:
  Grid grid_;
  int channels_;
  std::vector<float> data_;
  Spacing spacing_;
  std::vector<std::string> names_;
};

}  // namespace segqc
