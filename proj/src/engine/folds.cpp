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

#include "segqc/engine/folds.hpp"

#include <algorithm>

#include "segqc/util/error.hpp"
#include "segqc/util/rng.hpp"

namespace segqc::engine {

std::vector<Fold> case_folds(std::vector<std::string> case_ids, int k, std::uint64_t seed) {
  std::sort(case_ids.begin(), case_ids.end());
  if (std::adjacent_find(case_ids.begin(), case_ids.end()) != case_ids.end()) fail_data("duplicate case id");
  if (k < 2) fail_config("need at least 2 folds");
  if (case_ids.size() < static_cast<std::size_t>(k))
    fail_data("cannot split " + std::to_string(case_ids.size()) + " cases into " + std::to_string(k) + " folds");
  Rng rng(seed);
  std::shuffle(case_ids.begin(), case_ids.end(), rng);
  std::vector<std::vector<std::string>> parts(k);
  for (std::size_t i = 0; i < case_ids.size(); ++i) parts[i % k].push_back(case_ids[i]);
  std::vector<Fold> folds(k);
  for (int f = 0; f < k; ++f) {
    folds[f].validation = parts[f];
    for (int g = 0; g < k; ++g)
      if (g != f) folds[f].train.insert(folds[f].train.end(), parts[g].begin(), parts[g].end());
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].validation.begin(), folds[f].validation.end());
  }
  return folds;
}

std::vector<nlohmann::json> expand_grid(const nlohmann::json& base, const nlohmann::json& axes) {
  std::vector<nlohmann::json> out{base};
  if (!axes.is_object()) fail_config("sweep grid must be an object of value lists");
  for (const auto& [key, values] : axes.items()) {
    if (!values.is_array() || values.empty()) fail_config("sweep axis '" + key + "' needs a non-empty list");
    nlohmann::json::json_pointer ptr;
    std::size_t start = 0;
    while (start <= key.size()) {
      const std::size_t dot = std::min(key.find('.', start), key.size());
      ptr /= key.substr(start, dot - start);
      start = dot + 1;
    }
    std::vector<nlohmann::json> next;
    for (const auto& cfg : out)
      for (const auto& v : values) {
        auto c = cfg;
        c[ptr] = v;
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace segqc::engine
