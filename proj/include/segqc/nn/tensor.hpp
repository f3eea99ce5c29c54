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
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segqc/core/grid.hpp"

namespace segqc::nn {

/// Tensor extent (C, D, H, W). Vectors use (n, 1, 1, 1); conv weights use
/// (out, in, k^3, 1).
struct Shape {
  int c = 1, d = 1, h = 1, w = 1;

  [[nodiscard]] std::size_t numel() const noexcept {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(d) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  [[nodiscard]] std::size_t plane() const noexcept {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  [[nodiscard]] Grid grid() const noexcept { return {d, h, w}; }
  static Shape of(int c, Grid g) { return {c, g.d, g.h, g.w}; }
  static Shape vec(int n) { return {n, 1, 1, 1}; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

struct Node;
using Var = std::shared_ptr<Node>;

/// A value in the computation graph. Non-leaf nodes that require gradients
/// keep their inputs and a backward closure that reads `grad` and
/// accumulates into the inputs' `grad`.
struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;
  bool requires_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backward;
  std::string name;

  /// Gradient buffer, allocated (zeroed) on first use.
  float* grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
    return grad.data();
  }
  [[nodiscard]] bool has_grad() const noexcept { return grad.size() == value.size() && !grad.empty(); }
  void zero_grad() { grad.clear(); }
};

Var constant(Shape shape, std::vector<float> value);
Var parameter(Shape shape, std::vector<float> value, std::string name);

/// Records whether new graph nodes keep their backward closures.
bool grad_enabled() noexcept;

/// Disables graph recording for its lifetime (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Creates an op output. When gradients are enabled and any input requires
/// them, the node keeps `inputs` and `backward`.
Var make_node(Shape shape, std::vector<float> value, std::vector<Var> inputs,
              std::function<void(Node&)> backward);

/// Reverse-mode sweep. Each seed pairs a node with dL/d(node); seeds are
/// added to existing gradients. Interior gradients are released afterwards
/// unless `retain` is set; leaf (parameter) gradients accumulate.
void backward(const std::vector<std::pair<Var, std::vector<float>>>& seeds, bool retain = false);

}  // namespace segqc::nn
