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
#include <cstddef>
#include <string>

namespace segqc {

/// Spatial extent (D, H, W) of a volume; W is the fastest-varying axis.
struct Grid {
  int d = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] constexpr std::size_t voxels() const noexcept {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  [[nodiscard]] constexpr std::size_t index(int z, int y, int x) const noexcept {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(h) +
            static_cast<std::size_t>(y)) * static_cast<std::size_t>(w) +
           static_cast<std::size_t>(x);
  }
  [[nodiscard]] constexpr bool contains(int z, int y, int x) const noexcept {
    return z >= 0 && y >= 0 && x >= 0 && z < d && y < h && x < w;
  }
  [[nodiscard]] constexpr int extent(int axis) const noexcept {
    return axis == 0 ? d : (axis == 1 ? h : w);
  }
  [[nodiscard]] bool valid() const noexcept { return d > 0 && h > 0 && w > 0; }

  friend constexpr bool operator==(const Grid&, const Grid&) = default;
};

std::string to_string(const Grid& g);

using Spacing = std::array<double, 3>;

inline constexpr Spacing kUnitSpacing{1.0, 1.0, 1.0};

}  // namespace segqc
