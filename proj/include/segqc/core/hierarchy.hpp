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

namespace segqc {

using Label = std::uint8_t;

struct BaseLabel {
  std::string name;
  Label code = 0;
};

/// A derived (tissue) class: a named union of base labels.
struct DerivedClass {
  std::string name;
  std::vector<Label> members;
};

/// How the derived classes relate by inclusion. Declared, then validated.
enum class Nesting { kChain, kAntichain };

/// Label vocabulary plus the C derived classes evaluated per channel.
/// For chains, classes are ordered outermost first (e.g. WT, TC, ET).
class ClassHierarchy {
 public:
  ClassHierarchy(std::vector<BaseLabel> base_labels,
                 std::vector<DerivedClass> classes, Nesting nesting);

  /// ED/NCR/ET with WT ⊇ TC ⊇ ET (codes NCR=1, ED=2, ET=3).
  static ClassHierarchy brats();
  /// LV/Myo/RV as disjoint singleton classes.
  static ClassHierarchy cardiac();
  /// A single foreground label with a single class.
  static ClassHierarchy binary();

  [[nodiscard]] const std::vector<BaseLabel>& base_labels() const noexcept { return base_labels_; }
  [[nodiscard]] const std::vector<DerivedClass>& classes() const noexcept { return classes_; }
  [[nodiscard]] Nesting nesting() const noexcept { return nesting_; }
  [[nodiscard]] int num_classes() const noexcept { return static_cast<int>(classes_.size()); }
  [[nodiscard]] int num_base_labels() const noexcept { return static_cast<int>(base_labels_.size()); }

  [[nodiscard]] bool is_declared(Label code) const noexcept { return code == 0 || membership_[code] != 0; }
  /// Bit c set iff `code` belongs to derived class c. Zero for background.
  [[nodiscard]] std::uint32_t membership(Label code) const noexcept { return membership_[code]; }
  /// Label written for class c when recomposing a multiclass mask.
  [[nodiscard]] Label representative(int c) const noexcept { return representatives_[c]; }
  /// Position of `code` in base_labels() (0-based), or -1 for background.
  [[nodiscard]] int base_index(Label code) const noexcept;

  friend bool operator==(const ClassHierarchy& a, const ClassHierarchy& b);

 private:
  std::vector<BaseLabel> base_labels_;
  std::vector<DerivedClass> classes_;
  Nesting nesting_;
  std::vector<std::uint32_t> membership_;  // indexed by label code, 256 entries
  std::vector<Label> representatives_;
};

void to_json(nlohmann::json& j, const ClassHierarchy& h);
ClassHierarchy hierarchy_from_json(const nlohmann::json& j);

}  // namespace segqc
