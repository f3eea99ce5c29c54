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
#include <vector>

#include <json.hpp>

namespace segqc::ue_baseline {

struct ForestConfig {
  int trees = 100;
  int max_depth = 0;  // 0 = grow until pure or min_samples_split
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  // Fraction of features tried at each split.
  double max_features = 1.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const ForestConfig& c);
void from_json(const nlohmann::json& j, ForestConfig& c);

/// CART regression tree with a vector-valued leaf; splits minimise the summed
/// squared error over all outputs.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> value;
  };
  std::vector<Node> nodes;

  [[nodiscard]] const std::vector<double>& predict(const std::vector<double>& x) const;
};

/// Bagged multi-output regression trees.
class RandomForest {
 public:
  RandomForest() = default;
  explicit RandomForest(ForestConfig cfg) : cfg_(cfg) {}

  /// X: n rows of d features; Y: n rows of k outputs.
  void fit(const std::vector<std::vector<double>>& X, const std::vector<std::vector<double>>& Y);
  [[nodiscard]] std::vector<double> predict(const std::vector<double>& x) const;

  [[nodiscard]] const ForestConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

  friend void to_json(nlohmann::json& j, const RandomForest& f);
  friend void from_json(const nlohmann::json& j, RandomForest& f);

 private:
  ForestConfig cfg_;
  std::size_t n_features_ = 0;
  std::size_t n_outputs_ = 0;
  std::vector<RegressionTree> trees_;
};

}  // namespace segqc::ue_baseline
