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
#include <functional>
#include <vector>

#include <json.hpp>

#include "segqc/core/hierarchy.hpp"
#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"
#include "segqc/nn/ops.hpp"
#include "segqc/nn/params.hpp"

namespace segqc::proxyseg {

struct ProxySegConfig {
  int modalities = 1;
  int base_filters = 8;
  // Number of resolution levels; the bottleneck sits at 1 / 2^(depth-1).
  int depth = 3;
  float dropout_p = 0.5f;
  float leaky_slope = 0.01f;

  void validate() const;
};

void to_json(nlohmann::json& j, const ProxySegConfig& c);
void from_json(const nlohmann::json& j, ProxySegConfig& c);

/// One training pair.
struct Example {
  const Volume* image;
  const LabelMask* gt;
};

struct TrainOptions {
  int epochs = 10;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  /// Called after each epoch (1-based) with the mean training loss.
  std::function<void(int epoch, double loss)> on_epoch;
};

/// Small encoder-decoder segmenter with dropout after every convolution
/// block. Output channels: background, then the hierarchy's base labels in
/// declared order.
class ProxySegmenter {
 public:
  ProxySegmenter(ProxySegConfig cfg, ClassHierarchy hierarchy, std::uint64_t seed);

  [[nodiscard]] int num_outputs() const noexcept { return hierarchy_.num_base_labels() + 1; }
  [[nodiscard]] const ProxySegConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const ClassHierarchy& hierarchy() const noexcept { return hierarchy_; }
  [[nodiscard]] nn::ParamStore& params() noexcept { return params_; }

  void check_input(Grid grid) const;
  nn::Var logits(const nn::Var& input, Rng* dropout_rng) const;

  /// Softmax probabilities (K, D, H, W). Dropout is active iff `dropout_rng` is set.
  std::vector<float> segment(const Volume& image, Rng* dropout_rng = nullptr) const;
  /// Argmax label mask of the deterministic pass.
  LabelMask predict_mask(const Volume& image) const;
  /// Mean of T dropout-active softmax passes, (K, D, H, W).
  std::vector<float> mc_dropout_umap(const Volume& image, int T, std::uint64_t seed) const;

  /// One epoch over `data` in the given order, one Adam step per example.
  double train_epoch(const std::vector<Example>& data, nn::Adam& opt, Rng& rng) const;
  void train(const std::vector<Example>& data, const TrainOptions& opts);

  void save(const std::filesystem::path& dir) const;
  static ProxySegmenter load(const std::filesystem::path& dir);

 private:
  struct ConvNorm {
    nn::Var w, gamma, beta;
  };
  ConvNorm conv_norm(const std::string& name, int in, int out, int k, Rng& rng);
  nn::Var block(const ConvNorm& cn, const nn::Var& x, nn::Stride3 stride, Rng* rng) const;

  ProxySegConfig cfg_;
  ClassHierarchy hierarchy_;
  nn::ParamStore params_;
  std::vector<ConvNorm> enc_;   // per level
  std::vector<ConvNorm> down_;  // per level transition
  std::vector<nn::Var> up_w_, up_b_;
  std::vector<ConvNorm> dec_;
  nn::Var head_w_, head_b_;
};

/// Softmax input channels: per-modality z-scored image.
nn::Var image_input(const Volume& image);

/// Maps per-label probabilities (K, ...) to derived-class probabilities
/// (C, ...) by summing member labels.
std::vector<float> class_probabilities(const std::vector<float>& label_probs, const ClassHierarchy& h,
                                       Grid grid);

/// Label codes for argmax indices (index 0 = background).
LabelMask argmax_mask(const std::vector<float>& label_probs, const ClassHierarchy& h, Grid grid);

}  // namespace segqc::proxyseg
