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

#include "segqc/metrics/metrics.hpp"

#include <cmath>
#include <string>

#include "segqc/core/encoding.hpp"
#include "segqc/metrics/distance.hpp"
#include "segqc/util/error.hpp"

namespace segqc::metrics {

namespace {

void require_same(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) fail_data(std::string(what) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

void require_same(const ClassHierarchy& a, const ClassHierarchy& b, const char* what) {
  if (!(a == b)) fail_data(std::string(what) + ": class hierarchy mismatch");
}

}  // namespace

double multiclass_dsc(const LabelMask& query, const LabelMask& gt) {
  require_same(query.grid(), gt.grid(), "multiclass_dsc");
  require_same(query.hierarchy(), gt.hierarchy(), "multiclass_dsc");
  std::size_t tp = 0, fp = 0, fn = 0;
  const auto q = query.data();
  const auto g = gt.data();
  for (std::size_t v = 0; v < q.size(); ++v) {
    if (q[v] == g[v]) {
      tp += q[v] != 0;
    } else {
      fp += q[v] != 0;
      fn += g[v] != 0;
    }
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double surface_dice(std::span<const std::uint8_t> query, std::span<const std::uint8_t> gt, Grid grid,
                    double tolerance, Spacing spacing) {
  if (!(tolerance >= 0.0)) fail_config("NSD tolerance must be non-negative");
  const auto bq = boundary(query, grid);
  const auto bg = boundary(gt, grid);
  std::size_t nq = 0, ng = 0;
  for (auto b : bq) nq += b;
  for (auto b : bg) ng += b;
  if (nq == 0 && ng == 0) return 1.0;
  if (nq == 0 || ng == 0) return 0.0;
  const auto dq = squared_distance_transform(bq, grid, spacing);
  const auto dg = squared_distance_transform(bg, grid, spacing);
  const double tau2 = tolerance * tolerance;
  std::size_t hits = 0;
  for (std::size_t v = 0; v < bq.size(); ++v) {
    if (bq[v] && dg[v] <= tau2) ++hits;
    if (bg[v] && dq[v] <= tau2) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(nq + ng);
}

std::vector<double> per_class_nsd(const BinaryMaskStack& query, const BinaryMaskStack& gt,
                                  double tolerance, Spacing spacing) {
  require_same(query.grid(), gt.grid(), "per_class_nsd");
  if (query.num_channels() != gt.num_channels()) fail_data("per_class_nsd: channel count mismatch");
  if (!(tolerance >= 0.0)) fail_config("NSD tolerance must be non-negative");
  std::vector<double> out;
  for (int c = 0; c < query.num_channels(); ++c)
    out.push_back(surface_dice(query.channel(c), gt.channel(c), query.grid(), tolerance, spacing));
  return out;
}

double nsd(const BinaryMaskStack& query, const BinaryMaskStack& gt, double tolerance, Spacing spacing) {
  const auto per = per_class_nsd(query, gt, tolerance, spacing);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

QualityScores quality(const LabelMask& query, const LabelMask& gt, double tolerance) {
  return {multiclass_dsc(query, gt), nsd(one_hot(query), one_hot(gt), tolerance)};
}

SEMStack sem_ground_truth(const LabelMask& query, const LabelMask& gt) {
  require_same(query.grid(), gt.grid(), "sem_ground_truth");
  require_same(query.hierarchy(), gt.hierarchy(), "sem_ground_truth");
  const auto& h = query.hierarchy();
  const int C = h.num_classes();
  const std::size_t V = query.grid().voxels();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(C) * V);
  const auto q = query.data();
  const auto g = gt.data();
  for (std::size_t v = 0; v < V; ++v) {
    const std::uint32_t diff = h.membership(q[v]) ^ h.membership(g[v]);
    for (int c = 0; c < C; ++c) out[static_cast<std::size_t>(c) * V + v] = (diff >> c) & 1u;
  }
  return SEMStack(query.grid(), std::move(out), h);
}

double binary_dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) fail_data("binary_dice: size mismatch");
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] != 0;
    nb += b[i] != 0;
    inter += (a[i] != 0) && (b[i] != 0);
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

SemDice dsc_sem(const SEMStack& pred, const SEMStack& gt) {
  require_same(pred.grid(), gt.grid(), "dsc_sem");
  if (pred.num_channels() != gt.num_channels()) fail_data("dsc_sem: channel count mismatch");
  SemDice out;
  for (int c = 0; c < pred.num_channels(); ++c) out.per_class.push_back(binary_dice(pred.channel(c), gt.channel(c)));
  for (double v : out.per_class) out.mean += v;
  out.mean /= static_cast<double>(out.per_class.size());
  return out;
}

double pearson_r(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) fail_data("pearson_r: length mismatch");
  if (pred.size() < 2) fail_numeric("pearson_r needs at least two samples");
  const double n = static_cast<double>(pred.size());
  double mp = 0.0, mg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += pred[i];
    mg += gt[i];
  }
  mp /= n;
  mg /= n;
  double spg = 0.0, spp = 0.0, sgg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = pred[i] - mp, b = gt[i] - mg;
    spg += a * b;
    spp += a * a;
    sgg += b * b;
  }
  if (spp == 0.0 || sgg == 0.0) fail_numeric("pearson_r undefined for constant input");
  return spg / std::sqrt(spp * sgg);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double m = 0.0;
  for (double v : values) m += v;
  m /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - m) * (v - m);
  var /= static_cast<double>(values.size());
  return {m, std::sqrt(var)};
}

MeanStd mae(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) fail_data("mae: length mismatch");
  std::vector<double> err(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) err[i] = std::abs(pred[i] - gt[i]);
  return mean_std(err);
}

double ue_overlap(std::span<const std::uint8_t> umap_bin, std::span<const std::uint8_t> sem_gt) {
  if (umap_bin.size() != sem_gt.size()) fail_data("ue_overlap: shape mismatch");
  return binary_dice(umap_bin, sem_gt);
}

}  // namespace segqc::metrics
