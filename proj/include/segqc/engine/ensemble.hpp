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
#include <vector>

#include "segqc/engine/evaluate.hpp"
#include "segqc/model/qcresunet.hpp"

namespace segqc::engine {

/// Member-wise 0.5 threshold on SEM probabilities.
std::vector<std::uint8_t> binarize_sem(const std::vector<float>& sem_prob);

/// Per-voxel majority over member votes; a tie counts as an error.
std::vector<std::uint8_t> majority_vote(const std::vector<std::vector<std::uint8_t>>& votes);

/// Scores are the member means. `sem_prob` of the result holds the 0/1
/// majority-voted SEM.
model::QCPrediction ensemble_predict(const std::vector<const model::QCResUNet*>& members, const Volume& image,
                                     const LabelMask& query);

/// Evaluation predictor over `members`, which must outlive it.
Predictor ensemble_predictor(std::vector<const model::QCResUNet*> members);

/// Loads checkpoints and rejects differing configurations.
std::vector<model::QCResUNet> load_ensemble(const std::vector<std::filesystem::path>& dirs);

}  // namespace segqc::engine
