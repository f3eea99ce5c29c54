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
#include <vector>

#include <json.hpp>

namespace segqc::losses {

/// How the soft Dice term is normalised across classes.
enum class DiceNormalization {
  kPerClassMean,    // -(1/C) sum_c D_c
  kLiteralOneOverV  // -(1/V) sum_c D_c, V = voxels in the batch
};

/// Which cross-entropy terms are included.
enum class CeForm {
  kFullBinary,          // -(1/(VC)) sum [g log p + (1-g) log(1-p)]
  kLiteralPositiveOnly  // -(1/V) sum_v (1/C) sum_c g log p
};

struct LossConfig {
  double lambda_balance = 1.0;
  DiceNormalization dice_normalization = DiceNormalization::kPerClassMean;
  CeForm ce_form = CeForm::kFullBinary;
  double epsilon = 1e-5;

  void validate() const;
};

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

/// Per-class voxel maps of a batch, laid out (N, C, V).
struct SemView {
  std::span<const double> values;
  int batch = 1;
  int classes = 1;

  [[nodiscard]] std::size_t voxels() const noexcept {
    return values.size() / (static_cast<std::size_t>(batch) * static_cast<std::size_t>(classes));
  }
};

/// Subject-level scores of a batch.
struct ScoreView {
  std::span<const double> dsc;
  std::span<const double> nsd;
};

// Each loss returns its value and, when a gradient buffer is given, adds
// `grad_scale * dL/dx` into it (same layout as the prediction). At the MAE
// kink and outside the CE clamp the subgradient 0 is used.

double mae_loss(ScoreView pred, ScoreView gt, std::span<double> grad_dsc = {},
                std::span<double> grad_nsd = {}, double grad_scale = 1.0);

double dice_loss(SemView prob, SemView gt, const LossConfig& config, std::span<double> grad = {},
                 double grad_scale = 1.0);

double ce_loss(SemView prob, SemView gt, const LossConfig& config, std::span<double> grad = {},
               double grad_scale = 1.0);

struct CombinedLoss {
  double total = 0.0;
  double mae = 0.0;
  double dice = 0.0;
  double ce = 0.0;
};

struct CombinedGrad {
  std::vector<double> dsc;
  std::vector<double> nsd;
  std::vector<double> sem;
};

/// L_MAE + lambda (L_DSC + L_CE). `grad`, when given, is resized and filled.
CombinedLoss combined_loss(ScoreView pred, SemView prob, ScoreView gt, SemView sem_gt,
                           const LossConfig& config, CombinedGrad* grad = nullptr);

}  // namespace segqc::losses
