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

#include "segqc/core/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "segqc/core/grid.hpp"
#include "segqc/util/error.hpp"

namespace segqc {

std::string to_string(const Grid& g) {
  return "(" + std::to_string(g.d) + ", " + std::to_string(g.h) + ", " + std::to_string(g.w) + ")";
}

namespace {

bool subset(const std::vector<Label>& a, const std::vector<Label>& b) {
  return std::all_of(a.begin(), a.end(),
                     [&](Label l) { return std::find(b.begin(), b.end(), l) != b.end(); });
}

}  // namespace

ClassHierarchy::ClassHierarchy(std::vector<BaseLabel> base_labels,
                               std::vector<DerivedClass> classes, Nesting nesting)
    : base_labels_(std::move(base_labels)),
      classes_(std::move(classes)),
      nesting_(nesting),
      membership_(256, 0) {
  if (classes_.empty()) fail_config("class hierarchy needs at least one derived class");
  if (classes_.size() > 32) fail_config("class hierarchy supports at most 32 derived classes");
  std::set<int> codes;
  for (const auto& b : base_labels_) {
    if (b.code == 0) fail_config("base label '" + b.name + "' uses reserved background code 0");
    if (!codes.insert(b.code).second)
      fail_config("duplicate base label code " + std::to_string(b.code));
  }
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (classes_[c].members.empty())
      fail_config("derived class '" + classes_[c].name + "' has no members");
    for (Label l : classes_[c].members) {
      if (!codes.count(l))
        fail_config("derived class '" + classes_[c].name + "' references undeclared label " +
                    std::to_string(l));
      membership_[l] |= (1u << c);
    }
  }
  for (const auto& b : base_labels_) {
    if (membership_[b.code] == 0)
      fail_config("base label '" + b.name + "' belongs to no derived class");
  }
  for (std::size_t c = 0; c + 1 < classes_.size(); ++c) {
    for (std::size_t k = c + 1; k < classes_.size(); ++k) {
      const bool inner = subset(classes_[k].members, classes_[c].members);
      const bool outer = subset(classes_[c].members, classes_[k].members);
      if (nesting_ == Nesting::kChain && k == c + 1 && !inner)
        fail_config("chain hierarchy requires '" + classes_[k].name + "' ⊆ '" +
                    classes_[c].name + "'");
      if (nesting_ == Nesting::kAntichain && (inner || outer))
        fail_config("antichain hierarchy has nested classes '" + classes_[c].name + "' and '" +
                    classes_[k].name + "'");
    }
  }
  // Representative: the member belonging to the fewest classes, lowest code on ties.
  for (const auto& cls : classes_) {
    Label best = cls.members.front();
    for (Label l : cls.members) {
      const int pl = std::popcount(membership_[l]);
      const int pb = std::popcount(membership_[best]);
      if (pl < pb || (pl == pb && l < best)) best = l;
    }
    representatives_.push_back(best);
  }
}

ClassHierarchy ClassHierarchy::brats() {
  return ClassHierarchy({{"NCR", 1}, {"ED", 2}, {"ET", 3}},
                        {{"WT", {1, 2, 3}}, {"TC", {1, 3}}, {"ET", {3}}}, Nesting::kChain);
}

ClassHierarchy ClassHierarchy::cardiac() {
  return ClassHierarchy({{"RV", 1}, {"Myo", 2}, {"LV", 3}},
                        {{"LV", {3}}, {"Myo", {2}}, {"RV", {1}}}, Nesting::kAntichain);
}

ClassHierarchy ClassHierarchy::binary() {
  return ClassHierarchy({{"FG", 1}}, {{"FG", {1}}}, Nesting::kChain);
}

int ClassHierarchy::base_index(Label code) const noexcept {
  for (std::size_t i = 0; i < base_labels_.size(); ++i)
    if (base_labels_[i].code == code) return static_cast<int>(i);
  return -1;
}

bool operator==(const ClassHierarchy& a, const ClassHierarchy& b) {
  if (a.nesting_ != b.nesting_ || a.base_labels_.size() != b.base_labels_.size() ||
      a.classes_.size() != b.classes_.size())
    return false;
  for (std::size_t i = 0; i < a.base_labels_.size(); ++i)
    if (a.base_labels_[i].code != b.base_labels_[i].code ||
        a.base_labels_[i].name != b.base_labels_[i].name)
      return false;
  for (std::size_t i = 0; i < a.classes_.size(); ++i)
    if (a.classes_[i].name != b.classes_[i].name || a.classes_[i].members != b.classes_[i].members)
      return false;
  return true;
}

void to_json(nlohmann::json& j, const ClassHierarchy& h) {
  j = nlohmann::json::object();
  j["nesting"] = h.nesting() == Nesting::kChain ? "chain" : "antichain";
  auto& labels = j["base_labels"] = nlohmann::json::array();
  for (const auto& b : h.base_labels()) labels.push_back({{"name", b.name}, {"code", b.code}});
  auto& classes = j["classes"] = nlohmann::json::array();
  for (const auto& c : h.classes()) classes.push_back({{"name", c.name}, {"members", c.members}});
}

ClassHierarchy hierarchy_from_json(const nlohmann::json& j) {
  try {
    std::vector<BaseLabel> labels;
    for (const auto& b : j.at("base_labels"))
      labels.push_back({b.at("name").get<std::string>(), b.at("code").get<Label>()});
    std::vector<DerivedClass> classes;
    for (const auto& c : j.at("classes"))
      classes.push_back({c.at("name").get<std::string>(), c.at("members").get<std::vector<Label>>()});
    const auto nesting = j.at("nesting").get<std::string>();
    if (nesting != "chain" && nesting != "antichain") fail_config("unknown nesting '" + nesting + "'");
    return ClassHierarchy(std::move(labels), std::move(classes),
                          nesting == "chain" ? Nesting::kChain : Nesting::kAntichain);
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("malformed class hierarchy: ") + e.what());
  }
}

}  // namespace segqc
