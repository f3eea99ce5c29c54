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

#include "segqc/ue_baseline/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segqc/util/error.hpp"
#include "segqc/util/rng.hpp"

namespace segqc::ue_baseline {

namespace {

using Matrix = std::vector<std::vector<double>>;

struct Builder {
  const Matrix& X;
  const Matrix& Y;
  const ForestConfig& cfg;
  Rng& rng;
  std::size_t k;
  RegressionTree tree;

  std::vector<double> mean_of(const std::vector<std::size_t>& idx) const {
    std::vector<double> m(k, 0.0);
    for (std::size_t i : idx)
      for (std::size_t o = 0; o < k; ++o) m[o] += Y[i][o];
    for (double& v : m) v /= static_cast<double>(idx.size());
    return m;
  }

  int grow(std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].value = mean_of(idx);
    const std::size_t n = idx.size();
    if (n < static_cast<std::size_t>(cfg.min_samples_split) || (cfg.max_depth > 0 && depth >= cfg.max_depth))
      return id;

    // Total sum of squares; a pure node stays a leaf.
    std::vector<double> total(k, 0.0), total_sq(k, 0.0);
    for (std::size_t i : idx)
      for (std::size_t o = 0; o < k; ++o) {
        total[o] += Y[i][o];
        total_sq[o] += Y[i][o] * Y[i][o];
      }
    double parent_sse = 0.0;
    for (std::size_t o = 0; o < k; ++o) parent_sse += total_sq[o] - total[o] * total[o] / static_cast<double>(n);
    if (parent_sse <= 1e-15) return id;

    const std::size_t d = X.front().size();
    std::vector<std::size_t> feats(d);
    std::iota(feats.begin(), feats.end(), 0);
    const auto tries = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.max_features * d)));
    if (tries < d) {
      std::shuffle(feats.begin(), feats.end(), rng);
      feats.resize(tries);
    }

    double best_gain = 1e-12;
    int best_f = -1;
    double best_t = 0.0;
    const std::size_t leaf = static_cast<std::size_t>(cfg.min_samples_leaf);
    std::vector<std::size_t> order(idx);
    for (std::size_t f : feats) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return X[a][f] < X[b][f] || (X[a][f] == X[b][f] && a < b);
      });
      std::vector<double> left(k, 0.0), left_sq(k, 0.0);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t o = 0; o < k; ++o) {
          left[o] += Y[order[i]][o];
          left_sq[o] += Y[order[i]][o] * Y[order[i]][o];
        }
        const double a = X[order[i]][f], b = X[order[i + 1]][f];
        if (!(a < b)) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < leaf || nr < leaf) continue;
        double sse = 0.0;
        for (std::size_t o = 0; o < k; ++o) {
          const double r = total[o] - left[o], r_sq = total_sq[o] - left_sq[o];
          sse += left_sq[o] - left[o] * left[o] / static_cast<double>(nl) + r_sq - r * r / static_cast<double>(nr);
        }
        const double gain = parent_sse - sse;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_t = 0.5 * (a + b);
          // Guard against the midpoint rounding onto the upper value.
          if (!(best_t < b)) best_t = a;
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<std::size_t> l, r;
    for (std::size_t i : idx) (X[i][best_f] <= best_t ? l : r).push_back(i);
    tree.nodes[id].feature = best_f;
    tree.nodes[id].threshold = best_t;
    const int li = grow(l, depth + 1);
    const int ri = grow(r, depth + 1);
    tree.nodes[id].left = li;
    tree.nodes[id].right = ri;
    return id;
  }
};

}  // namespace

void ForestConfig::validate() const {
  if (trees < 1) fail_config("forest needs at least one tree");
  if (max_depth < 0) fail_config("max_depth must be >= 0");
  if (min_samples_split < 2) fail_config("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) fail_config("min_samples_leaf must be >= 1");
  if (!(max_features > 0.0 && max_features <= 1.0)) fail_config("max_features must be in (0, 1]");
}

void to_json(nlohmann::json& j, const ForestConfig& c) {
  j = nlohmann::json{{"trees", c.trees},
                     {"max_depth", c.max_depth},
                     {"min_samples_split", c.min_samples_split},
                     {"min_samples_leaf", c.min_samples_leaf},
                     {"max_features", c.max_features},
                     {"bootstrap", c.bootstrap},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ForestConfig& c) {
  try {
    c = ForestConfig{};
    c.trees = j.value("trees", c.trees);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.min_samples_split = j.value("min_samples_split", c.min_samples_split);
    c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
    c.max_features = j.value("max_features", c.max_features);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("forest config: ") + e.what());
  }
  c.validate();
}

const std::vector<double>& RegressionTree::predict(const std::vector<double>& x) const {
  int n = 0;
  while (nodes[n].feature >= 0) n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  return nodes[n].value;
}

void RandomForest::fit(const std::vector<std::vector<double>>& X, const std::vector<std::vector<double>>& Y) {
  cfg_.validate();
  if (X.empty() || X.size() != Y.size()) fail_data("forest needs matching, non-empty feature and target rows");
  n_features_ = X.front().size();
  n_outputs_ = Y.front().size();
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != n_features_ || Y[i].size() != n_outputs_) fail_data("ragged forest training rows");
    for (double v : X[i])
      if (!std::isfinite(v)) fail_data("non-finite feature in row " + std::to_string(i));
    for (double v : Y[i])
      if (!std::isfinite(v)) fail_data("non-finite target in row " + std::to_string(i));
  }
  trees_.clear();
  for (int t = 0; t < cfg_.trees; ++t) {
    Rng rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> idx(X.size());
    if (cfg_.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);
      for (auto& i : idx) i = pick(rng);
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    Builder b{X, Y, cfg_, rng, n_outputs_, {}};
    b.grow(idx, 0);
    trees_.push_back(std::move(b.tree));
  }
}

std::vector<double> RandomForest::predict(const std::vector<double>& x) const {
  if (trees_.empty()) fail_config("forest is not fitted");
  if (x.size() != n_features_) fail_data("feature vector has the wrong length");
  std::vector<double> out(n_outputs_, 0.0);
  for (const auto& t : trees_) {
    const auto& v = t.predict(x);
    for (std::size_t o = 0; o < n_outputs_; ++o) out[o] += v[o];
  }
  for (double& v : out) v /= static_cast<double>(trees_.size());
  return out;
}

void to_json(nlohmann::json& j, const RandomForest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f.trees_) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(), value = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
  }
  j = nlohmann::json{{"config", f.cfg_}, {"n_features", f.n_features_}, {"n_outputs", f.n_outputs_}, {"trees", trees}};
}

void from_json(const nlohmann::json& j, RandomForest& f) {
  try {
    f.cfg_ = j.at("config").get<ForestConfig>();
    f.n_features_ = j.at("n_features").get<std::size_t>();
    f.n_outputs_ = j.at("n_outputs").get<std::size_t>();
    f.trees_.clear();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      const std::size_t n = t.at("feature").size();
      tree.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto& node = tree.nodes[i];
        node.feature = t.at("feature")[i].get<int>();
        node.threshold = t.at("threshold")[i].get<double>();
        node.left = t.at("left")[i].get<int>();
        node.right = t.at("right")[i].get<int>();
        node.value = t.at("value")[i].get<std::vector<double>>();
        const int limit = static_cast<int>(n);
        if (node.feature >= 0 && (node.feature >= static_cast<int>(f.n_features_) || node.left <= static_cast<int>(i) ||
                                  node.right <= static_cast<int>(i) || node.left >= limit || node.right >= limit))
          fail_config("corrupt tree node " + std::to_string(i));
        if (node.value.size() != f.n_outputs_) fail_config("corrupt tree leaf " + std::to_string(i));
      }
      f.trees_.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("forest: ") + e.what());
  }
}

}  // namespace segqc::ue_baseline
