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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segqc/datagen/balance.hpp"
#include "segqc/datagen/manifest.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/model/qcresunet.hpp"

namespace segqc::engine {

/// Everything a predictor may look at for one query. `gt` is only meant
/// for the oracle predictor.
struct EvalInput {
  const datagen::CaseEntry& case_entry;
  const datagen::SegEntry& seg;
  const Volume& image;
  const LabelMask& query;
  const LabelMask& gt;
};

/// Returns subject scores and C SEM channels; SEM values are binarized at 0.5.
using Predictor = std::function<model::QCPrediction(const EvalInput&)>;

/// Predicts the true scores and error maps.
Predictor oracle_predictor(double nsd_tolerance);
/// Constant scores and an empty SEM.
Predictor constant_predictor(double value);

struct EvalRow {
  std::string seg_id;
  std::string case_id;
  double gt_dsc = 0.0;
  double gt_nsd = 0.0;
  double pred_dsc = 0.0;
  double pred_nsd = 0.0;
  std::vector<double> dsc_sem;  // per class
};

struct EvalReport {
  std::string dataset;
  std::vector<std::string> class_names;
  std::size_t n = 0;
  std::optional<double> pearson_r_dsc;  // empty when undefined
  std::optional<double> pearson_r_nsd;
  metrics::MeanStd mae_dsc;
  metrics::MeanStd mae_nsd;
  std::vector<metrics::MeanStd> dsc_sem_per_class;
  metrics::MeanStd dsc_sem_mean;
  std::vector<EvalRow> rows;  // scatter data, index order
  std::vector<std::string> errors;
  bool integrity_ok = true;
  std::vector<std::string> flags;
};

void to_json(nlohmann::json& j, const EvalReport& r);

/// Requires a deterministic index. Missing or unreadable inputs are listed in
/// `errors` and the report covers the remainder.
EvalReport evaluate(const datagen::DatasetManifest& manifest, const datagen::BalancedIndex& index,
                    const Predictor& predictor, int workers = 1, const std::string& dataset = "");

/// Writes report.json and rows.csv into `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace segqc::engine
