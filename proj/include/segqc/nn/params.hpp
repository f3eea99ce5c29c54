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
#include <string>
#include <vector>

#include "segqc/nn/tensor.hpp"
#include "segqc/util/rng.hpp"

namespace segqc::nn {

/// Ordered collection of named trainable tensors.
class ParamStore {
 public:
  /// He-normal initialised parameter (std = sqrt(2 / fan_in)).
  Var he_normal(const std::string& name, Shape shape, int fan_in, Rng& rng);
  Var filled(const std::string& name, Shape shape, float value);

  [[nodiscard]] const std::vector<Var>& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t count() const noexcept;
  [[nodiscard]] const Var& find(const std::string& name) const;

  void zero_grad();

  /// Binary weights blob: magic, count, then per tensor (name, numel, floats).
  void save(const std::filesystem::path& path) const;
  /// Loads values by name; names, order and sizes must match exactly.
  void load(const std::filesystem::path& path);
  void copy_values_from(const ParamStore& other);

 private:
  std::vector<Var> params_;
};

struct AdamConfig {
  double lr = 2.1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 penalty added to the gradient before the moment updates.
  double weight_decay = 0.0;
};

class Adam {
 public:
  Adam(std::vector<Var> params, AdamConfig cfg);

  void set_lr(double lr) noexcept { cfg_.lr = lr; }
  [[nodiscard]] double lr() const noexcept { return cfg_.lr; }
  /// Applies one update from accumulated grads, scaled by `grad_scale`.
  void step(double grad_scale = 1.0);

 private:
  std::vector<Var> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace segqc::nn
