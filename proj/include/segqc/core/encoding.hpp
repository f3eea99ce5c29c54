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

#include <cstddef>

#include "segqc/core/masks.hpp"

namespace segqc {

/// Channel c is set exactly where the voxel's base label belongs to class c.
BinaryMaskStack one_hot(const LabelMask& mask);

struct Recomposition {
  LabelMask mask;
  /// Voxels whose channel pattern is not the one_hot pattern of any label
  /// (e.g. ET set where TC is clear). Zero for stacks produced by one_hot.
  std::size_t inconsistent_voxels = 0;
};

/// Inverse of one_hot. Classes are visited in declared order and each set
/// channel writes its representative label, so the last (innermost for
/// chains) writer wins: ED := WT∧¬TC, NCR := TC∧¬ET, ET := ET.
Recomposition to_multiclass(const BinaryMaskStack& stack);

/// True iff channel c+1 ⊆ channel c for every c (chain hierarchies).
bool satisfies_nesting(const BinaryMaskStack& stack);

/// Validates that every voxel holds a declared label; throws DataError naming the offending value.
void validate_labels(const LabelMask& mask);

}  // namespace segqc
