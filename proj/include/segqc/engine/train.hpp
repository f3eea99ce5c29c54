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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"
#include "segqc/datagen/balance.hpp"
#include "segqc/datagen/manifest.hpp"
#include "segqc/engine/augment.hpp"
#include "segqc/losses/losses.hpp"
#include "segqc/model/qcresunet.hpp"

namespace segqc::engine {

struct TrainConfig {
  double initial_lr = 2.1e-4;
  double lr_decay = 0.9;
  double lr_floor = 1e-6;
  double weight_decay = 1e-4;
  int batch_size = 4;
  int epochs = 100;
  // Balanced draws per epoch; each draw takes n_s segmentations per bin.
  int draws_per_epoch = 1;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  // Only "fp32" is implemented.
  std::string precision = "fp32";
  int workers = 1;

  void validate() const;
  /// max(initial_lr * lr_decay^epoch, lr_floor), epoch counted from 0.
  [[nodiscard]] double lr_at_epoch(int epoch) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Image, query and ground truth with the stored quality of the query.
struct Triple {
  std::string seg_id;
  std::string case_id;
  std::shared_ptr<const Volume> image;
  std::shared_ptr<const LabelMask> gt;
  std::shared_ptr<const LabelMask> query;
  double dsc = 0.0;
  double nsd = 0.0;
};

struct TrainData {
  std::vector<Triple> triples;
  // Stochastic index over `triples`; without it every epoch visits all triples.
  std::optional<datagen::BalancedIndex> balance;
  double nsd_tolerance = 1.0;
};

/// Loads every segmentation of the listed cases (all cases when empty).
/// `balanced` builds a stochastic balanced index over them.
TrainData load_training_data(const datagen::DatasetManifest& manifest, const std::vector<std::string>& case_ids,
                             bool balanced, std::uint64_t seed);

/// Triples named by a balance index. A stochastic index becomes the
/// training sampler; a deterministic one fixes the set to its selection.
TrainData load_training_data(const datagen::DatasetManifest& manifest, const datagen::BalancedIndex& index);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  // NaN when the validation set is empty or its predictions are constant.
  double val_r_dsc = 0.0;
  double val_r_nsd = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

struct TrainOptions {
  // Receives history.csv, config files and the best checkpoint under best/.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochRecord&)> on_epoch;
  // Checked after each epoch; true ends training early.
  std::function<bool(const EpochRecord&)> should_stop;
};

/// Adam with per-epoch exponential decay. The model holds the best-validation
/// weights on return (the last epoch's weights when there is no validation
/// signal).
TrainResult train(model::QCResUNet& model, const TrainData& data, const std::vector<Triple>& validation,
                  const TrainConfig& cfg, const losses::LossConfig& loss, const TrainOptions& opts = {});

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

/// Quality targets and error maps of a (possibly augmented) query.
struct Targets {
  double dsc = 0.0;
  double nsd = 0.0;
  SEMStack sem;
};
Targets compute_targets(const LabelMask& query, const LabelMask& gt, double nsd_tolerance);

}  // namespace segqc::engine
