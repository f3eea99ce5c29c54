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
#include <cstdint>
#include <span>
#include <vector>

#include "segqc/core/grid.hpp"
#include "segqc/core/hierarchy.hpp"

namespace segqc {

/// Integer label volume (D, H, W) whose values are declared base labels or 0.
class LabelMask {
 public:
  LabelMask(Grid grid, std::vector<Label> data, ClassHierarchy hierarchy,
            Spacing spacing = kUnitSpacing);

  /// All-background mask.
  static LabelMask zeros(Grid grid, ClassHierarchy hierarchy, Spacing spacing = kUnitSpacing);

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] const ClassHierarchy& hierarchy() const noexcept { return hierarchy_; }
  [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
  [[nodiscard]] std::span<const Label> data() const noexcept { return data_; }
  [[nodiscard]] Label at(int z, int y, int x) const noexcept { return data_[grid_.index(z, y, x)]; }

  friend bool operator==(const LabelMask& a, const LabelMask& b) {
    return a.grid_ == b.grid_ && a.data_ == b.data_;
  }

 private:
  Grid grid_;
  std::vector<Label> data_;
  ClassHierarchy hierarchy_;
  Spacing spacing_;
};

/// C binary channels over a grid, stored channel-major as 0/1 bytes.
template <class Tag>
class ChannelMask {
 public:
  ChannelMask(Grid grid, std::vector<std::uint8_t> data, ClassHierarchy hierarchy);

  static ChannelMask zeros(Grid grid, ClassHierarchy hierarchy) {
    std::vector<std::uint8_t> d(static_cast<std::size_t>(hierarchy.num_classes()) * grid.voxels(), 0);
    return ChannelMask(grid, std::move(d), std::move(hierarchy));
  }

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] const ClassHierarchy& hierarchy() const noexcept { return hierarchy_; }
  [[nodiscard]] int num_channels() const noexcept { return hierarchy_.num_classes(); }
  [[nodiscard]] std::span<const std::uint8_t> data() const noexcept { return data_; }
  [[nodiscard]] std::span<const std::uint8_t> channel(int c) const noexcept {
    return std::span<const std::uint8_t>(data_).subspan(static_cast<std::size_t>(c) * grid_.voxels(),
                                                        grid_.voxels());
  }
  [[nodiscard]] std::size_t count(int c) const noexcept;

  friend bool operator==(const ChannelMask& a, const ChannelMask& b) {
    return a.grid_ == b.grid_ && a.data_ == b.data_;
  }

 private:
  Grid grid_;
  std::vector<std::uint8_t> data_;
  ClassHierarchy hierarchy_;
};

struct BinaryStackTag {};
struct ErrorMapTag {};

/// Hierarchical one-hot form of a LabelMask (channels may nest).
using BinaryMaskStack = ChannelMask<BinaryStackTag>;
/// Per-class segmentation error map; channels need not nest.
using SEMStack = ChannelMask<ErrorMapTag>;

extern template class ChannelMask<BinaryStackTag>;
extern template class ChannelMask<ErrorMapTag>;

}  // namespace segqc
