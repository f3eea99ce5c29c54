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

#include <filesystem>
#include <string>
#include <vector>

#include "segqc/core/grid.hpp"
#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"

namespace segqc::io {

/// Element type of a stored tensor.
enum class DType { kFloat32, kUInt8 };

/// A decoded tensor of shape (channels, D, H, W) widened to float.
struct Tensor4 {
  Grid grid;
  int channels = 1;
  Spacing spacing = kUnitSpacing;
  DType stored_as = DType::kFloat32;
  std::vector<float> values;
};

/// Format is chosen by extension: `.nii`/`.nii.gz` is NIfTI-1 with a
/// diagonal affine built from the spacing; `.raw` is little-endian data
/// plus a `<file>.json` sidecar `{dtype, shape, spacing}`.
void write_tensor(const std::filesystem::path& path, const Tensor4& t);
Tensor4 read_tensor(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const Volume& v);
Volume read_volume(const std::filesystem::path& path);

void write_mask(const std::filesystem::path& path, const LabelMask& m);
LabelMask read_mask(const std::filesystem::path& path, const ClassHierarchy& hierarchy);

/// Writes a C-channel binary stack as a 4D uint8 image.
void write_channels(const std::filesystem::path& path, const SEMStack& s, Spacing spacing = kUnitSpacing);

/// Writes C float channels over `grid` (probability maps, heatmaps).
void write_float_channels(const std::filesystem::path& path, const std::vector<float>& values,
                          int channels, Grid grid, Spacing spacing = kUnitSpacing);

std::string read_text(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see partial output.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace segqc::io
