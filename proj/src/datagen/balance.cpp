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

#include "segqc/datagen/balance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "segqc/util/error.hpp"

namespace segqc::datagen {

namespace {

std::string bin_label(int b, int n_bins) {
  std::ostringstream os;
  os << "bin " << b << " [" << static_cast<double>(b) / n_bins << ", " << static_cast<double>(b + 1) / n_bins
     << (b + 1 == n_bins ? "]" : ")");
  return os.str();
}

// k distinct picks from `pool` (partial Fisher-Yates on a copy).
std::vector<std::size_t> pick(const std::vector<std::size_t>& pool, std::size_t k, Rng& rng) {
  std::vector<std::size_t> v = pool;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, v.size() - 1);
    std::swap(v[i], v[d(rng)]);
  }
  v.resize(k);
  return v;
}

}  // namespace

int quality_bin(double dsc, int n_bins) {
  if (!(dsc >= 0.0 && dsc <= 1.0)) fail_data("quality value " + std::to_string(dsc) + " outside [0, 1]");
  return std::min(n_bins - 1, static_cast<int>(std::floor(dsc * n_bins)));
}

BalancedIndex build_balanced_index(const std::vector<QualityRecord>& records, int n_bins, BalanceMode mode,
                                   std::uint64_t seed) {
  if (n_bins < 1) fail_config("n_bins must be >= 1");
  BalancedIndex idx;
  idx.n_bins = n_bins;
  idx.mode = mode;
  idx.seed = seed;
  idx.bins.assign(n_bins, {});
  for (std::size_t i = 0; i < records.size(); ++i) {
    idx.bins[quality_bin(records[i].dsc, n_bins)].push_back(i);
    idx.seg_ids.push_back(records[i].seg_id);
  }
  for (int b = 0; b < n_bins; ++b)
    if (idx.bins[b].empty()) fail_data(bin_label(b, n_bins) + " is empty; generate more segmentations");
  idx.n_s = idx.bins[0].size();
  for (const auto& b : idx.bins) idx.n_s = std::min(idx.n_s, b.size());
  if (mode == BalanceMode::kDeterministic) {
    Rng rng(seed);
    for (const auto& b : idx.bins)
      for (std::size_t i : pick(b, idx.n_s, rng)) idx.selected.push_back(idx.seg_ids[i]);
  }
  return idx;
}

void to_json(nlohmann::json& j, const BalancedIndex& idx) {
  j = nlohmann::json{{"schema_version", 1},
                     {"n_bins", idx.n_bins},
                     {"mode", idx.mode == BalanceMode::kDeterministic ? "deterministic" : "stochastic"},
                     {"seed", idx.seed},
                     {"n_s", idx.n_s},
                     {"bins", idx.bins},
                     {"seg_ids", idx.seg_ids},
                     {"selected", idx.selected}};
}

void from_json(const nlohmann::json& j, BalancedIndex& idx) {
  try {
    idx.n_bins = j.at("n_bins").get<int>();
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "deterministic") idx.mode = BalanceMode::kDeterministic;
    else if (mode == "stochastic") idx.mode = BalanceMode::kStochastic;
    else fail_config("unknown balance mode '" + mode + "'");
    idx.seed = j.at("seed").get<std::uint64_t>();
    idx.n_s = j.at("n_s").get<std::size_t>();
    idx.bins = j.at("bins").get<std::vector<std::vector<std::size_t>>>();
    idx.seg_ids = j.at("seg_ids").get<std::vector<std::string>>();
    idx.selected = j.value("selected", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("balanced index: ") + e.what());
  }
  if (static_cast<int>(idx.bins.size()) != idx.n_bins) fail_config("balanced index bin count mismatch");
  for (const auto& b : idx.bins) {
    if (b.size() < idx.n_s) fail_config("balanced index bin smaller than n_s");
    for (std::size_t i : b)
      if (i >= idx.seg_ids.size()) fail_config("balanced index refers past its record list");
  }
}

BalancedSampler::BalancedSampler(const BalancedIndex& index, std::uint64_t seed) : index_(&index), rng_(seed) {
  if (index.n_s == 0) fail_data("balanced index has no samples per bin");
}

std::vector<std::size_t> BalancedSampler::draw() {
  std::vector<std::size_t> out;
  for (const auto& b : index_->bins) {
    const auto p = pick(b, index_->n_s, rng_);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::string> BalancedSampler::draw_ids() {
  std::vector<std::string> out;
  for (std::size_t i : draw()) out.push_back(index_->seg_ids[i]);
  return out;
}

}  // namespace segqc::datagen
