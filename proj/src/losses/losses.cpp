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

#include "segqc/losses/losses.hpp"

#include <algorithm>
#include <cmath>

#include "segqc/util/error.hpp"

namespace segqc::losses {

void LossConfig::validate() const {
  if (!(lambda_balance >= 0.0)) fail_config("lambda_balance must be >= 0");
  if (!(epsilon > 0.0) || epsilon >= 0.5) fail_config("epsilon must be in (0, 0.5)");
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"lambda_balance", c.lambda_balance},
       {"dice_normalization",
        c.dice_normalization == DiceNormalization::kPerClassMean ? "per_class_mean" : "literal_1_over_V"},
       {"ce_form", c.ce_form == CeForm::kFullBinary ? "full_binary" : "literal_positive_only"},
       {"epsilon", c.epsilon}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  c.lambda_balance = j.value("lambda_balance", c.lambda_balance);
  c.epsilon = j.value("epsilon", c.epsilon);
  const auto dn = j.value("dice_normalization", std::string("per_class_mean"));
  if (dn == "per_class_mean") c.dice_normalization = DiceNormalization::kPerClassMean;
  else if (dn == "literal_1_over_V") c.dice_normalization = DiceNormalization::kLiteralOneOverV;
  else fail_config("unknown dice_normalization '" + dn + "'");
  const auto ce = j.value("ce_form", std::string("full_binary"));
  if (ce == "full_binary") c.ce_form = CeForm::kFullBinary;
  else if (ce == "literal_positive_only") c.ce_form = CeForm::kLiteralPositiveOnly;
  else fail_config("unknown ce_form '" + ce + "'");
  c.validate();
}

namespace {

void check_scores(ScoreView a, ScoreView b) {
  if (a.dsc.size() != a.nsd.size() || b.dsc.size() != b.nsd.size() || a.dsc.size() != b.dsc.size())
    fail_data("score batch size mismatch");
  if (a.dsc.empty()) fail_data("score batch is empty");
}

void check_sem(SemView a, SemView b) {
  if (a.values.size() != b.values.size() || a.batch != b.batch || a.classes != b.classes)
    fail_data("SEM tensor shape mismatch");
  if (a.batch < 1 || a.classes < 1 || a.values.empty() ||
      a.values.size() % (static_cast<std::size_t>(a.batch) * static_cast<std::size_t>(a.classes)) != 0)
    fail_data("SEM tensor shape is not (N, C, V)");
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double mae_loss(ScoreView pred, ScoreView gt, std::span<double> grad_dsc, std::span<double> grad_nsd,
                double grad_scale) {
  check_scores(pred, gt);
  const std::size_t n = pred.dsc.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(gt.dsc[i] - pred.dsc[i]) + std::abs(gt.nsd[i] - pred.nsd[i]);
  const double inv_n = 1.0 / static_cast<double>(n);
  if (!grad_dsc.empty())
    for (std::size_t i = 0; i < n; ++i) grad_dsc[i] += grad_scale * inv_n * sign(pred.dsc[i] - gt.dsc[i]);
  if (!grad_nsd.empty())
    for (std::size_t i = 0; i < n; ++i) grad_nsd[i] += grad_scale * inv_n * sign(pred.nsd[i] - gt.nsd[i]);
  return s * inv_n;
}

double dice_loss(SemView prob, SemView gt, const LossConfig& config, std::span<double> grad,
                 double grad_scale) {
  check_sem(prob, gt);
  const int N = prob.batch, C = prob.classes;
  const std::size_t V = prob.voxels();
  const double total_voxels = static_cast<double>(V) * N;
  const double norm = config.dice_normalization == DiceNormalization::kPerClassMean ? 1.0 / C : 1.0 / total_voxels;
  double loss = 0.0;
  for (int c = 0; c < C; ++c) {
    double spg = 0.0, sp = 0.0, sg = 0.0;
    for (int n = 0; n < N; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * C + c) * V;
      for (std::size_t v = 0; v < V; ++v) {
        const double p = prob.values[base + v], g = gt.values[base + v];
        spg += p * g;
        sp += p;
        sg += g;
      }
    }
    const double den = sp + sg + config.epsilon;
    loss -= norm * 2.0 * spg / den;
    if (!grad.empty()) {
      // d/dp_v [2 spg / den] = 2 g_v / den - 2 spg / den^2
      const double k = -norm * grad_scale;
      const double shift = 2.0 * spg / (den * den);
      for (int n = 0; n < N; ++n) {
        const std::size_t base = (static_cast<std::size_t>(n) * C + c) * V;
        for (std::size_t v = 0; v < V; ++v) grad[base + v] += k * (2.0 * gt.values[base + v] / den - shift);
      }
    }
  }
  return loss;
}

double ce_loss(SemView prob, SemView gt, const LossConfig& config, std::span<double> grad, double grad_scale) {
  check_sem(prob, gt);
  const double eps = config.epsilon;
  const double total_voxels = static_cast<double>(prob.voxels()) * prob.batch;
  const double norm = 1.0 / (total_voxels * prob.classes);
  const bool full = config.ce_form == CeForm::kFullBinary;
  double s = 0.0;
  for (std::size_t i = 0; i < prob.values.size(); ++i) {
    const double raw = prob.values[i];
    const double p = std::clamp(raw, eps, 1.0 - eps);
    const double g = gt.values[i];
    s += g * std::log(p) + (full ? (1.0 - g) * std::log(1.0 - p) : 0.0);
    if (!grad.empty() && raw > eps && raw < 1.0 - eps) {
      const double d = -(g / p - (full ? (1.0 - g) / (1.0 - p) : 0.0));
      grad[i] += grad_scale * norm * d;
    }
  }
  return -norm * s;
}

CombinedLoss combined_loss(ScoreView pred, SemView prob, ScoreView gt, SemView sem_gt,
                           const LossConfig& config, CombinedGrad* grad) {
  config.validate();
  check_scores(pred, gt);
  check_sem(prob, sem_gt);
  if (static_cast<std::size_t>(prob.batch) != pred.dsc.size())
    fail_data("score batch and SEM batch sizes differ");
  CombinedLoss out;
  std::span<double> gd, gn, gs;
  if (grad) {
    grad->dsc.assign(pred.dsc.size(), 0.0);
    grad->nsd.assign(pred.nsd.size(), 0.0);
    grad->sem.assign(prob.values.size(), 0.0);
    gd = grad->dsc;
    gn = grad->nsd;
    gs = grad->sem;
  }
  const double lambda = config.lambda_balance;
  out.mae = mae_loss(pred, gt, gd, gn, 1.0);
  out.dice = dice_loss(prob, sem_gt, config, gs, lambda);
  out.ce = ce_loss(prob, sem_gt, config, gs, lambda);
  out.total = out.mae + lambda * (out.dice + out.ce);
  if (!std::isfinite(out.total)) fail_numeric("combined loss is not finite");
  return out;
}

}  // namespace segqc::losses
