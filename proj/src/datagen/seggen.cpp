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

#include "segqc/datagen/seggen.hpp"

#include <cmath>
#include <numbers>

#include "segqc/util/error.hpp"

namespace segqc::datagen {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

Mat3 axis_rotation(int axis, double deg) {
  const double t = deg * std::numbers::pi / 180.0, c = std::cos(t), s = std::sin(t);
  const int a = (axis + 1) % 3, b = (axis + 2) % 3;
  Mat3 r{};
  r[axis][axis] = 1.0;
  r[a][a] = c;
  r[a][b] = -s;
  r[b][a] = s;
  r[b][b] = c;
  return r;
}

Mat3 identity() {
  Mat3 r{};
  for (int i = 0; i < 3; ++i) r[i][i] = 1.0;
  return r;
}

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo <= iv.hi)) fail_config(std::string("SegGen interval ") + name + " must be ordered");
}

}  // namespace

void SegGenParams::validate() const {
  check_interval(rotation_deg, "rotation_deg");
  check_interval(scale, "scale");
  check_interval(translation_vox, "translation_vox");
  check_interval(deform_displacement_vox, "deform_displacement_vox");
  if (!(scale.lo > 0.0)) fail_config("SegGen scale must be positive");
  if (!(per_transform_probability >= 0.0 && per_transform_probability <= 1.0))
    fail_config("per_transform_probability must be in [0, 1]");
  if (applications_per_gt < 1) fail_config("applications_per_gt must be >= 1");
  if (control_points < 2) fail_config("control_points must be >= 2");
}

void to_json(nlohmann::json& j, const SegGenParams& p) {
  auto iv = [](const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); };
  j = nlohmann::json{{"schema_version", 1},
                     {"rotation_deg", iv(p.rotation_deg)},
                     {"scale", iv(p.scale)},
                     {"translation_vox", iv(p.translation_vox)},
                     {"deform_displacement_vox", iv(p.deform_displacement_vox)},
                     {"per_transform_probability", p.per_transform_probability},
                     {"applications_per_gt", p.applications_per_gt},
                     {"control_points", p.control_points}};
}

void from_json(const nlohmann::json& j, SegGenParams& p) {
  try {
    auto iv = [&](const char* key, Interval& out) {
      if (j.contains(key)) out = {j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
    };
    p = SegGenParams{};
    iv("rotation_deg", p.rotation_deg);
    iv("scale", p.scale);
    iv("translation_vox", p.translation_vox);
    iv("deform_displacement_vox", p.deform_displacement_vox);
    p.per_transform_probability = j.value("per_transform_probability", p.per_transform_probability);
    p.applications_per_gt = j.value("applications_per_gt", p.applications_per_gt);
    p.control_points = j.value("control_points", p.control_points);
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("SegGen params: ") + e.what());
  }
  p.validate();
}

SegGenTransform sample_transform(const SegGenParams& params, Rng& rng) {
  params.validate();
  std::bernoulli_distribution apply(params.per_transform_probability);
  SegGenTransform t;
  t.control_points = params.control_points;
  if (apply(rng)) {
    std::array<double, 3> r{};
    for (auto& v : r) v = uniform(rng, params.rotation_deg.lo, params.rotation_deg.hi);
    t.rotation_deg = r;
  }
  if (apply(rng)) t.scale = uniform(rng, params.scale.lo, params.scale.hi);
  if (apply(rng)) {
    std::array<double, 3> tr{};
    for (auto& v : tr) v = uniform(rng, params.translation_vox.lo, params.translation_vox.hi);
    t.translation = tr;
  }
  if (apply(rng)) {
    const int n = params.control_points;
    std::vector<double> d(static_cast<std::size_t>(n) * n * n * 3);
    for (auto& v : d) v = uniform(rng, params.deform_displacement_vox.lo, params.deform_displacement_vox.hi);
    t.displacement = std::move(d);
  }
  return t;
}

LabelMask apply_transform(const LabelMask& mask, const SegGenTransform& t) {
  if (t.identity()) return mask;
  const Grid g = mask.grid();
  const std::array<double, 3> c{(g.d - 1) / 2.0, (g.h - 1) / 2.0, (g.w - 1) / 2.0};
  // Forward linear part A = S * R; the lookup uses A^-1 = R^T / s.
  Mat3 R = identity();
  if (t.rotation_deg)
    for (int a = 0; a < 3; ++a) R = mul(axis_rotation(a, (*t.rotation_deg)[a]), R);
  const double s = t.scale.value_or(1.0);
  Mat3 inv{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv[i][j] = R[j][i] / s;
  const std::array<double, 3> tr = t.translation.value_or(std::array<double, 3>{0, 0, 0});
  const int n = t.control_points;
  if (t.displacement && t.displacement->size() != static_cast<std::size_t>(n) * n * n * 3)
    fail_config("displacement grid size does not match control_points");

  auto displacement = [&](double z, double y, double x, int axis) {
    const double p[3] = {z, y, x};
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
      const int ext = g.extent(a);
      const double u = ext > 1 ? p[a] * (n - 1) / (ext - 1) : 0.0;
      i0[a] = std::min(n - 2, static_cast<int>(std::floor(u)));
      f[a] = u - i0[a];
    }
    double v = 0.0;
    for (int dz = 0; dz < 2; ++dz)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const double w = (dz ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dx ? f[2] : 1 - f[2]);
          const std::size_t k = ((static_cast<std::size_t>(i0[0] + dz) * n + i0[1] + dy) * n + i0[2] + dx) * 3 + axis;
          v += w * (*t.displacement)[k];
        }
    return v;
  };

  std::vector<Label> out(g.voxels(), 0);
  const auto src = mask.data();
  for (int z = 0; z < g.d; ++z)
    for (int y = 0; y < g.h; ++y)
      for (int x = 0; x < g.w; ++x) {
        double q[3] = {static_cast<double>(z), static_cast<double>(y), static_cast<double>(x)};
        if (t.displacement) {
          double u[3];
          for (int a = 0; a < 3; ++a) u[a] = displacement(z, y, x, a);
          for (int a = 0; a < 3; ++a) q[a] -= u[a];
        }
        double d[3];
        for (int a = 0; a < 3; ++a) d[a] = q[a] - c[a] - tr[a];
        int p[3];
        for (int a = 0; a < 3; ++a)
          p[a] = static_cast<int>(std::lround(inv[a][0] * d[0] + inv[a][1] * d[1] + inv[a][2] * d[2] + c[a]));
        if (g.contains(p[0], p[1], p[2])) out[g.index(z, y, x)] = src[g.index(p[0], p[1], p[2])];
      }
  return LabelMask(g, std::move(out), mask.hierarchy(), mask.spacing());
}

LabelMask seggen_degrade(const LabelMask& gt, const SegGenParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return apply_transform(gt, sample_transform(params, rng));
}

}  // namespace segqc::datagen
