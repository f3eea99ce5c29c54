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

#include "segqc/explain/grad_cam.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <json.hpp>

#include "segqc/core/encoding.hpp"
#include "segqc/core/io.hpp"
#include "segqc/util/error.hpp"

namespace segqc::explain {

namespace {

// Backward passes write parameter gradients; serialise them and clear the
// gradients afterwards so concurrent callers never see each other's state.
std::mutex& backward_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

CamTarget cam_target_from_string(const std::string& s) {
  if (s == "dsc") return CamTarget::kDsc;
  if (s == "nsd") return CamTarget::kNsd;
  fail_config("Grad-CAM target must be 'dsc' or 'nsd', got '" + s + "'");
}

std::string to_string(CamTarget t) { return t == CamTarget::kDsc ? "dsc" : "nsd"; }

std::vector<float> resample_trilinear(const std::vector<float>& src, Grid from, Grid to) {
  if (src.size() != from.voxels()) fail_data("resample: source size does not match its grid");
  std::vector<float> out(to.voxels());
  const int fe[3] = {from.d, from.h, from.w}, te[3] = {to.d, to.h, to.w};
  std::vector<int> lo[3], hi[3];
  std::vector<double> frac[3];
  for (int a = 0; a < 3; ++a) {
    for (int i = 0; i < te[a]; ++i) {
      const double p = std::clamp((i + 0.5) * fe[a] / te[a] - 0.5, 0.0, static_cast<double>(fe[a] - 1));
      const int l = static_cast<int>(p);
      lo[a].push_back(l);
      hi[a].push_back(std::min(l + 1, fe[a] - 1));
      frac[a].push_back(p - l);
    }
  }
  std::size_t v = 0;
  for (int z = 0; z < to.d; ++z)
    for (int y = 0; y < to.h; ++y)
      for (int x = 0; x < to.w; ++x, ++v) {
        double acc = 0.0;
        for (int corner = 0; corner < 8; ++corner) {
          const bool bz = corner & 4, by = corner & 2, bx = corner & 1;
          const double wgt = (bz ? frac[0][z] : 1 - frac[0][z]) * (by ? frac[1][y] : 1 - frac[1][y]) *
                             (bx ? frac[2][x] : 1 - frac[2][x]);
          if (wgt == 0.0) continue;
          acc += wgt * src[from.index(bz ? hi[0][z] : lo[0][z], by ? hi[1][y] : lo[1][y], bx ? hi[2][x] : lo[2][x])];
        }
        out[v] = static_cast<float>(acc);
      }
  return out;
}

GradCam grad_cam(const nn::Var& features, const nn::Var& output, int index, Grid out_grid) {
  if (!features || !output) fail_config("Grad-CAM needs a feature node and an output node");
  if (index < 0 || static_cast<std::size_t>(index) >= output->value.size()) fail_config("Grad-CAM output index out of range");
  GradCam cam;
  cam.grid = out_grid;
  cam.feature_grid = features->shape.grid();
  const int C = features->shape.c;
  const std::size_t n = features->shape.plane();
  std::vector<float> grad;
  {
    std::lock_guard<std::mutex> lock(backward_mutex());
    std::vector<float> seed(output->value.size(), 0.0f);
    seed[index] = 1.0f;
    features->zero_grad();
    nn::backward({{output, seed}}, true);
    grad = features->has_grad() ? features->grad : std::vector<float>(features->value.size(), 0.0f);
    // Drop every gradient the sweep produced, parameters included.
    std::vector<nn::Node*> stack{output.get()};
    std::vector<const nn::Node*> seen;
    while (!stack.empty()) {
      nn::Node* node = stack.back();
      stack.pop_back();
      if (std::find(seen.begin(), seen.end(), node) != seen.end()) continue;
      seen.push_back(node);
      node->zero_grad();
      for (const auto& in : node->inputs)
        if (in) stack.push_back(in.get());
    }
  }

  cam.channel_weights.assign(C, 0.0f);
  for (int c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += grad[c * n + i];
    cam.channel_weights[c] = static_cast<float>(s / static_cast<double>(n));
  }
  std::vector<float> map(n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += static_cast<double>(cam.channel_weights[c]) * features->value[c * n + i];
    map[i] = static_cast<float>(std::max(0.0, s));
  }
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const float min = *lo, range = *hi - *lo;
  const bool no_grad = std::all_of(grad.begin(), grad.end(), [](float g) { return g == 0.0f; });
  if (no_grad || !(range > 0.0f)) {
    cam.zero_gradient = true;
    cam.warnings.push_back(no_grad ? "gradient of the target is zero on this layer; heatmap left empty"
                                   : "rectified map is constant; heatmap left empty");
    cam.heatmap.assign(out_grid.voxels(), 0.0f);
    return cam;
  }
  for (float& v : map) v = (v - min) / range;
  cam.heatmap = resample_trilinear(map, cam.feature_grid, out_grid);
  for (float& v : cam.heatmap) v = std::clamp(v, 0.0f, 1.0f);
  return cam;
}

GradCam grad_cam(const model::QCResUNet& net, const Volume& image, const LabelMask& query, CamTarget target,
                 const std::string& layer) {
  const auto g = net.forward(image, query, nullptr);
  const auto it = g.features.find(layer);
  if (it == g.features.end()) fail_config("unknown Grad-CAM layer '" + layer + "'");
  return grad_cam(it->second, g.scores, target == CamTarget::kDsc ? 0 : 1, image.grid());
}

void write_grad_cam(const std::filesystem::path& stem, const GradCam& cam, const std::string& layer, CamTarget target,
                    Spacing spacing) {
  std::filesystem::path nii = stem;
  nii += ".nii.gz";
  std::filesystem::path meta = stem;
  meta += ".json";
  if (!stem.parent_path().empty()) std::filesystem::create_directories(stem.parent_path());
  io::write_float_channels(nii, cam.heatmap, 1, cam.grid, spacing);
  const nlohmann::json j{{"layer", layer},
                         {"target", to_string(target)},
                         {"grid", {cam.grid.d, cam.grid.h, cam.grid.w}},
                         {"feature_grid", {cam.feature_grid.d, cam.feature_grid.h, cam.feature_grid.w}},
                         {"zero_gradient", cam.zero_gradient},
                         {"warnings", cam.warnings}};
  io::write_text(meta, j.dump(2) + "\n");
}

}  // namespace segqc::explain
