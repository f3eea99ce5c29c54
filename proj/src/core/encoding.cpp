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

#include "segqc/core/encoding.hpp"

#include <string>

#include "segqc/util/error.hpp"

namespace segqc {

void validate_labels(const LabelMask& mask) {
  const auto& h = mask.hierarchy();
  for (std::size_t i = 0; i < mask.data().size(); ++i) {
    const Label v = mask.data()[i];
    if (!h.is_declared(v))
      fail_data("undeclared label value " + std::to_string(v) + " at voxel " + std::to_string(i));
  }
}

BinaryMaskStack one_hot(const LabelMask& mask) {
  const auto& h = mask.hierarchy();
  const int C = h.num_classes();
  const std::size_t V = mask.grid().voxels();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(C) * V, 0);
  const auto labels = mask.data();
  for (std::size_t v = 0; v < V; ++v) {
    const Label l = labels[v];
    if (!h.is_declared(l)) fail_data("undeclared label value " + std::to_string(l));
    const std::uint32_t bits = h.membership(l);
    for (int c = 0; c < C; ++c) out[static_cast<std::size_t>(c) * V + v] = (bits >> c) & 1u;
  }
  return BinaryMaskStack(mask.grid(), std::move(out), h);
}

Recomposition to_multiclass(const BinaryMaskStack& stack) {
  const auto& h = stack.hierarchy();
  const int C = h.num_classes();
  const std::size_t V = stack.grid().voxels();
  const auto bits = stack.data();
  std::vector<Label> out(V, 0);
  std::size_t inconsistent = 0;
  for (std::size_t v = 0; v < V; ++v) {
    std::uint32_t pattern = 0;
    Label label = 0;
    for (int c = 0; c < C; ++c) {
      if (bits[static_cast<std::size_t>(c) * V + v]) {
        pattern |= 1u << c;
        label = h.representative(c);
      }
    }
    if (pattern != h.membership(label)) ++inconsistent;
    out[v] = label;
  }
  return {LabelMask(stack.grid(), std::move(out), h), inconsistent};
}

bool satisfies_nesting(const BinaryMaskStack& stack) {
  const int C = stack.num_channels();
  for (int c = 0; c + 1 < C; ++c) {
    const auto outer = stack.channel(c);
    const auto inner = stack.channel(c + 1);
    for (std::size_t v = 0; v < outer.size(); ++v)
      if (inner[v] && !outer[v]) return false;
  }
  return true;
}

}  // namespace segqc
