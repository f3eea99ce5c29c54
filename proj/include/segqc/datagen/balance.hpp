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
#include <string>
#include <vector>

#include <json.hpp>

#include "segqc/util/rng.hpp"

namespace segqc::datagen {

struct QualityRecord {
  std::string seg_id;
  double dsc = 0.0;
};

enum class BalanceMode { kDeterministic, kStochastic };

/// Bin of `dsc` among `n_bins` equal-width bins over [0, 1]; 1.0 falls in the last bin.
int quality_bin(double dsc, int n_bins = 10);

struct BalancedIndex {
  int n_bins = 10;
  BalanceMode mode = BalanceMode::kDeterministic;
  std::uint64_t seed = 0;
  std::size_t n_s = 0;
  // Record indices (into the build-time record list) per bin.
  std::vector<std::vector<std::size_t>> bins;
  std::vector<std::string> seg_ids;  // all records, build order
  // Deterministic mode: n_s ids per bin, bin-major.
  std::vector<std::string> selected;
};

/// Rejects dsc outside [0, 1] and names the first empty bin.
BalancedIndex build_balanced_index(const std::vector<QualityRecord>& records, int n_bins, BalanceMode mode,
                                   std::uint64_t seed);

void to_json(nlohmann::json& j, const BalancedIndex& idx);
void from_json(const nlohmann::json& j, BalancedIndex& idx);

/// Draws n_s ids per bin without replacement at each request.
class BalancedSampler {
 public:
  BalancedSampler(const BalancedIndex& index, std::uint64_t seed);
  /// Record indices of one balanced draw, bin-major.
  std::vector<std::size_t> draw();
  std::vector<std::string> draw_ids();

 private:
  const BalancedIndex* index_;
  Rng rng_;
};

}  // namespace segqc::datagen
