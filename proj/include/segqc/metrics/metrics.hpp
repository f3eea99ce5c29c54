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

#include <cstdint>
#include <span>
#include <vector>

#include "segqc/core/masks.hpp"

namespace segqc::metrics {

/// Subject-level quality measures, both in [0, 1].
struct QualityScores {
  double dsc = 0.0;
  double nsd = 0.0;
};

inline constexpr double kDefaultNsdTolerance = 1.0;

/// Micro-averaged multi-class Dice 2TP / (2TP + FP + FN). A voxel holding
/// the wrong foreground label counts as one FP and one FN. Two
/// all-background masks score 1.
double multiclass_dsc(const LabelMask& query, const LabelMask& gt);

/// Surface Dice at tolerance `tolerance` (in units of `spacing`) for each
/// channel. Both empty → 1, exactly one empty → 0.
std::vector<double> per_class_nsd(const BinaryMaskStack& query, const BinaryMaskStack& gt,
                                  double tolerance = kDefaultNsdTolerance,
                                  Spacing spacing = kUnitSpacing);
/// Mean of per_class_nsd over channels.
double nsd(const BinaryMaskStack& query, const BinaryMaskStack& gt,
           double tolerance = kDefaultNsdTolerance, Spacing spacing = kUnitSpacing);

/// Surface Dice of a single binary channel.
double surface_dice(std::span<const std::uint8_t> query, std::span<const std::uint8_t> gt, Grid grid,
                    double tolerance = kDefaultNsdTolerance, Spacing spacing = kUnitSpacing);

/// DSC and class-averaged NSD of a query against ground truth.
QualityScores quality(const LabelMask& query, const LabelMask& gt,
                      double tolerance = kDefaultNsdTolerance);

/// Channel c = one_hot(query)[c] XOR one_hot(gt)[c].
SEMStack sem_ground_truth(const LabelMask& query, const LabelMask& gt);

/// Binary Dice; both empty → 1.
double binary_dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct SemDice {
  std::vector<double> per_class;
  double mean = 0.0;
};
SemDice dsc_sem(const SEMStack& pred, const SEMStack& gt);

/// Sample Pearson correlation. Throws NumericalFailure when either input is constant.
double pearson_r(std::span<const double> pred, std::span<const double> gt);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
/// Mean and population std of |pred_i - gt_i|.
MeanStd mae(std::span<const double> pred, std::span<const double> gt);
MeanStd mean_std(std::span<const double> values);

/// Uncertainty-error overlap 2|U∩E| / (|U| + |E|); both empty → 1.
double ue_overlap(std::span<const std::uint8_t> umap_bin, std::span<const std::uint8_t> sem_gt);

}  // namespace segqc::metrics
