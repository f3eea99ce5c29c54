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

namespace segqc::engine {

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};

/// k-fold split keyed on case id. Ids are sorted, shuffled with `seed` and
/// dealt round-robin; fold i validates on part i and trains on the rest.
std::vector<Fold> case_folds(std::vector<std::string> case_ids, int k, std::uint64_t seed);

/// Cartesian product of `axes` ({"dotted.key": [values...]}) applied to
/// `base`, in key order with the last key varying fastest.
std::vector<nlohmann::json> expand_grid(const nlohmann::json& base, const nlohmann::json& axes);

}  // namespace segqc::engine
