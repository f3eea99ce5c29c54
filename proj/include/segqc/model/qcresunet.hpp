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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"
#include "segqc/nn/ops.hpp"
#include "segqc/nn/params.hpp"

namespace segqc::model {

using nn::Stride3;

inline constexpr int kConfigSchemaVersion = 1;

struct QCResUNetConfig {
  int modalities = 1;
  int num_sem_classes = 3;
  std::array<int, 4> stage_block_counts{3, 4, 6, 3};
  int base_filters = 8;
  std::array<Stride3, 4> downsample_rates{{{2, 2, 2}, {2, 2, 2}, {2, 2, 2}, {2, 2, 2}}};
  float spatial_dropout_p = 0.3f;
  int eca_kernel = 3;
  float leaky_slope = 0.01f;

  /// Image modalities followed by the C one-hot query channels.
  [[nodiscard]] int in_channels() const noexcept { return modalities + num_sem_classes; }
  [[nodiscard]] int width(int stage) const noexcept { return base_filters << stage; }
  /// Product of the rates of stages [0, stages) per axis.
  [[nodiscard]] Stride3 total_downsampling(int stages = 4) const noexcept;

  void validate() const;
  /// Rejects grids not divisible by the total downsampling, naming the padding needed.
  void check_input(Grid grid) const;

  static QCResUNetConfig brain(int modalities, int classes, int base_filters = 8);
  static QCResUNetConfig cardiac(int modalities, int classes, int base_filters = 8);
};

void to_json(nlohmann::json& j, const QCResUNetConfig& c);
void from_json(const nlohmann::json& j, QCResUNetConfig& c);

struct QCPrediction {
  double dsc_pred = 0.0;
  double nsd_pred = 0.0;
  int classes = 0;
  Grid grid;
  std::vector<float> sem_prob;  // (C, D, H, W)

  [[nodiscard]] std::span<const float> channel(int c) const {
    return std::span<const float>(sem_prob).subspan(static_cast<std::size_t>(c) * grid.voxels(), grid.voxels());
  }
};

/// Concatenates features with the one-hot query, then gates channels by
/// sigmoid(conv1d(GAP(.))).
nn::Var eca_aggregate(const nn::Var& features, const nn::Var& onehot_query, const nn::Var& conv_weight,
                      const nn::Var& conv_bias);

/// Network input: per-modality z-scored image channels, then the one-hot query.
nn::Var make_input(const Volume& image, const BinaryMaskStack& query_onehot);

class QCResUNet {
 public:
  QCResUNet(QCResUNetConfig cfg, std::uint64_t seed);

  struct Graph {
    nn::Var scores;  // (2): dsc, nsd after sigmoid
    nn::Var sem;     // (C, D, H, W) after sigmoid
    // stem, block1..block4, decoder
    std::map<std::string, nn::Var> features;
  };

  /// `dropout_rng` enables spatial dropout (training); nullptr disables it.
  Graph forward(const nn::Var& input, Rng* dropout_rng = nullptr) const;
  Graph forward(const Volume& image, const LabelMask& query, Rng* dropout_rng = nullptr) const;
  /// Inference without gradient recording or dropout.
  QCPrediction predict(const Volume& image, const LabelMask& query) const;

  [[nodiscard]] const QCResUNetConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] nn::ParamStore& params() noexcept { return params_; }
  [[nodiscard]] const nn::ParamStore& params() const noexcept { return params_; }
  /// Stem plus the four residual stages.
  [[nodiscard]] std::size_t encoder_parameter_count() const;

  /// Writes `config.json` and `weights.bin` into `dir`.
  void save(const std::filesystem::path& dir) const;
  static QCResUNet load(const std::filesystem::path& dir);

 private:
  struct ConvNorm {
    nn::Var w, gamma, beta;
  };
  struct Block {
    ConvNorm a, b;
    bool project = false;
    ConvNorm proj;
    Stride3 stride{1, 1, 1};
  };
  struct DecoderLevel {
    nn::Var up_w, up_b;
    ConvNorm c1, c2;
    Stride3 factor;
  };

  ConvNorm conv_norm(const std::string& name, int in, int out, int k, Rng& rng);
  nn::Var apply(const ConvNorm& cn, const nn::Var& x, Stride3 stride, bool activate) const;

  QCResUNetConfig cfg_;
  nn::ParamStore params_;
  ConvNorm stem_;
  std::array<std::vector<Block>, 4> stages_;
  std::size_t encoder_params_ = 0;
  nn::Var fc_w_, fc_b_;
  std::vector<DecoderLevel> decoder_;
  nn::Var eca_w_, eca_b_, head_w_, head_b_;
};

}  // namespace segqc::model
