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

#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"
#include "segqc/model/qcresunet.hpp"
#include "segqc/nn/tensor.hpp"

namespace segqc::explain {

enum class CamTarget { kDsc, kNsd };

CamTarget cam_target_from_string(const std::string& s);
std::string to_string(CamTarget t);

struct GradCam {
  Grid grid;                      // output (input) resolution
  std::vector<float> heatmap;     // in [0, 1]
  Grid feature_grid;
  std::vector<float> channel_weights;
  bool zero_gradient = false;     // heatmap is all zero
  std::vector<std::string> warnings;
};

/// Grad-CAM of `output[index]` with respect to `features` (C, d, h, w), both
/// nodes of one recorded graph: channel weights are spatial means of the
/// gradient, the map is ReLU(sum_c w_c A_c), min-max normalised, then
/// trilinearly resampled to `out_grid`.
GradCam grad_cam(const nn::Var& features, const nn::Var& output, int index, Grid out_grid);

/// Grad-CAM on a named feature map of the network ("stem", "block1".."block4", "decoder").
GradCam grad_cam(const model::QCResUNet& net, const Volume& image, const LabelMask& query, CamTarget target,
                 const std::string& layer = "block4");

/// Trilinear resampling of one channel with half-voxel-centred coordinates.
std::vector<float> resample_trilinear(const std::vector<float>& src, Grid from, Grid to);

/// Writes `<stem>.nii.gz` and `<stem>.json` (layer, target, warnings).
void write_grad_cam(const std::filesystem::path& stem, const GradCam& cam, const std::string& layer,
                    CamTarget target, Spacing spacing = kUnitSpacing);

}  // namespace segqc::explain
