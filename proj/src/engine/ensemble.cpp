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

#include "segqc/engine/ensemble.hpp"

#include "segqc/util/error.hpp"

namespace segqc::engine {

namespace {

void check_same_config(const model::QCResUNet& a, const model::QCResUNet& b) {
  if (nlohmann::json(a.config()).dump() != nlohmann::json(b.config()).dump())
    fail_config("ensemble members have different model configurations");
}

}  // namespace

std::vector<std::uint8_t> binarize_sem(const std::vector<float>& sem_prob) {
  std::vector<std::uint8_t> out(sem_prob.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sem_prob[i] >= 0.5f ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> majority_vote(const std::vector<std::vector<std::uint8_t>>& votes) {
  if (votes.empty()) fail_config("majority vote over no members");
  const std::size_t n = votes.front().size();
  std::vector<unsigned> count(n, 0);
  for (const auto& v : votes) {
    if (v.size() != n) fail_data("vote maps differ in size");
    for (std::size_t i = 0; i < n; ++i) count[i] += v[i];
  }
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = 2 * count[i] >= votes.size() ? 1 : 0;
  return out;
}

model::QCPrediction ensemble_predict(const std::vector<const model::QCResUNet*>& members, const Volume& image,
                                     const LabelMask& query) {
  if (members.empty()) fail_config("ensemble needs at least one checkpoint");
  for (const auto* m : members) check_same_config(*members.front(), *m);
  model::QCPrediction out;
  std::vector<std::vector<std::uint8_t>> votes;
  for (const auto* m : members) {
    auto p = m->predict(image, query);
    out.dsc_pred += p.dsc_pred;
    out.nsd_pred += p.nsd_pred;
    out.classes = p.classes;
    out.grid = p.grid;
    votes.push_back(binarize_sem(p.sem_prob));
  }
  out.dsc_pred /= static_cast<double>(members.size());
  out.nsd_pred /= static_cast<double>(members.size());
  const auto sem = majority_vote(votes);
  out.sem_prob.assign(sem.begin(), sem.end());
  return out;
}

Predictor ensemble_predictor(std::vector<const model::QCResUNet*> members) {
  if (members.empty()) fail_config("ensemble needs at least one checkpoint");
  return [members = std::move(members)](const EvalInput& in) { return ensemble_predict(members, in.image, in.query); };
}

std::vector<model::QCResUNet> load_ensemble(const std::vector<std::filesystem::path>& dirs) {
  if (dirs.empty()) fail_config("ensemble needs at least one checkpoint");
  std::vector<model::QCResUNet> out;
  for (const auto& d : dirs) {
    out.push_back(model::QCResUNet::load(d));
    check_same_config(out.front(), out.back());
  }
  return out;
}

}  // namespace segqc::engine
