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

#include "segqc/nn/tensor.hpp"

#include <unordered_set>

#include "segqc/util/error.hpp"

namespace segqc::nn {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.c) + ", " + std::to_string(s.d) + ", " + std::to_string(s.h) + ", " +
         std::to_string(s.w) + ")";
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var constant(Shape shape, std::vector<float> value) {
  if (value.size() != shape.numel()) fail_data("constant: value size does not match " + to_string(shape));
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(value);
  return n;
}

Var parameter(Shape shape, std::vector<float> value, std::string name) {
  auto n = constant(shape, std::move(value));
  n->requires_grad = true;
  n->name = std::move(name);
  return n;
}

Var make_node(Shape shape, std::vector<float> value, std::vector<Var> inputs,
              std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(value);
  if (g_grad_enabled) {
    for (const auto& in : inputs)
      if (in && in->requires_grad) n->requires_grad = true;
    if (n->requires_grad) {
      n->inputs = std::move(inputs);
      n->backward = std::move(backward);
    }
  }
  return n;
}

void backward(const std::vector<std::pair<Var, std::vector<float>>>& seeds, bool retain) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  // Iterative post-order DFS.
  std::vector<std::pair<Node*, std::size_t>> stack;
  for (const auto& [root, g] : seeds) {
    if (!root->requires_grad) continue;
    if (g.size() != root->value.size()) fail_data("backward seed size mismatch for " + to_string(root->shape));
    float* dst = root->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    if (seen.insert(root.get()).second) stack.emplace_back(root.get(), 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        Node* child = node->inputs[next++].get();
        if (child && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->has_grad()) n->backward(*n);
    if (!retain && n->backward) n->grad.clear();
  }
}

}  // namespace segqc::nn
