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

#include "segqc/core/volume.hpp"

#include <cmath>

#include "segqc/core/encoding.hpp"
#include "segqc/core/masks.hpp"
#include "segqc/util/error.hpp"

namespace segqc {

namespace {

void check_spacing(const Spacing& s) {
  for (double v : s)
    if (!(v > 0.0) || !std::isfinite(v)) fail_data("voxel spacing components must be positive");
}

}  // namespace

Volume::Volume(Grid grid, std::vector<float> data, Spacing spacing,
               std::vector<std::string> modality_names)
    : grid_(grid), channels_(0), data_(std::move(data)), spacing_(spacing), names_(std::move(modality_names)) {
  if (!grid_.valid()) fail_data("volume grid must be non-empty, got " + to_string(grid_));
  if (data_.empty() || data_.size() % grid_.voxels() != 0)
    fail_data("volume data size " + std::to_string(data_.size()) + " is not a multiple of " +
              std::to_string(grid_.voxels()) + " voxels");
  channels_ = static_cast<int>(data_.size() / grid_.voxels());
  check_spacing(spacing_);
  for (float v : data_)
    if (!std::isfinite(v)) fail_data("volume contains non-finite values");
  if (names_.empty()) {
    for (int m = 0; m < channels_; ++m) names_.push_back("M" + std::to_string(m + 1));
  } else if (static_cast<int>(names_.size()) != channels_) {
    fail_data("expected " + std::to_string(channels_) + " modality names, got " +
              std::to_string(names_.size()));
  }
}

LabelMask::LabelMask(Grid grid, std::vector<Label> data, ClassHierarchy hierarchy, Spacing spacing)
    : grid_(grid), data_(std::move(data)), hierarchy_(std::move(hierarchy)), spacing_(spacing) {
  if (!grid_.valid()) fail_data("mask grid must be non-empty, got " + to_string(grid_));
  if (data_.size() != grid_.voxels())
    fail_data("mask data size " + std::to_string(data_.size()) + " does not match grid " +
              to_string(grid_));
  check_spacing(spacing_);
  validate_labels(*this);
}

LabelMask LabelMask::zeros(Grid grid, ClassHierarchy hierarchy, Spacing spacing) {
  return LabelMask(grid, std::vector<Label>(grid.voxels(), 0), std::move(hierarchy), spacing);
}

template <class Tag>
ChannelMask<Tag>::ChannelMask(Grid grid, std::vector<std::uint8_t> data, ClassHierarchy hierarchy)
    : grid_(grid), data_(std::move(data)), hierarchy_(std::move(hierarchy)) {
  if (!grid_.valid()) fail_data("mask grid must be non-empty, got " + to_string(grid_));
  if (data_.size() != static_cast<std::size_t>(hierarchy_.num_classes()) * grid_.voxels())
    fail_data("channel mask size does not match C x grid");
  for (auto& v : data_) v = v ? 1 : 0;
}

template <class Tag>
std::size_t ChannelMask<Tag>::count(int c) const noexcept {
  std::size_t n = 0;
  for (auto v : channel(c)) n += v;
  return n;
}

template class ChannelMask<BinaryStackTag>;
template class ChannelMask<ErrorMapTag>;

}  // namespace segqc
