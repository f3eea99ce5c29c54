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

#include "segqc/datagen/phantom.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "segqc/util/error.hpp"
#include "segqc/util/rng.hpp"

namespace segqc::datagen {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n;
  Vec3 v{n(rng), n(rng), n(rng)};
  const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (auto& x : v) x /= len;
  return v;
}

// Random rotation from a uniformly random unit quaternion.
std::array<Vec3, 3> random_rotation(Rng& rng) {
  std::normal_distribution<double> n;
  double q[4] = {n(rng), n(rng), n(rng), n(rng)};
  const double len = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (auto& x : q) x /= len;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

struct Lumpy {
  Vec3 center;
  Vec3 radii;
  std::array<Vec3, 3> rot;
  std::array<Vec3, 4> dirs;
  std::array<double, 4> amp, freq, phase;
  double lumpiness;

  Lumpy(Vec3 c, const Interval& r, double lump, Rng& rng) : center(c), lumpiness(lump) {
    for (auto& x : radii) x = uniform(rng, r.lo, r.hi);
    rot = random_rotation(rng);
    for (int j = 0; j < 4; ++j) {
      dirs[j] = random_unit(rng);
      amp[j] = uniform(rng, -0.5, 0.5);
      freq[j] = uniform(rng, 1.5, 3.5);
      phase[j] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }
  }

  [[nodiscard]] bool contains(double z, double y, double x) const {
    const Vec3 d{z - center[0], y - center[1], x - center[2]};
    Vec3 local{};
    for (int a = 0; a < 3; ++a) local[a] = rot[a][0] * d[0] + rot[a][1] * d[1] + rot[a][2] * d[2];
    const double rho = std::sqrt(local[0] * local[0] / (radii[0] * radii[0]) + local[1] * local[1] / (radii[1] * radii[1]) +
                                 local[2] * local[2] / (radii[2] * radii[2]));
    if (rho < 1e-12) return true;
    double mod = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double u = (local[0] * dirs[j][0] + local[1] * dirs[j][1] + local[2] * dirs[j][2]) /
                       std::sqrt(local[0] * local[0] + local[1] * local[1] + local[2] * local[2]);
      mod += amp[j] * std::sin(freq[j] * u + phase[j]);
    }
    return rho <= 1.0 + lumpiness * mod;
  }
};

}  // namespace

void PhantomSpec::validate() const {
  if (!grid.valid()) fail_config("phantom grid must be positive");
  if (modalities < 1) fail_config("phantom needs at least one modality");
  const int C = hierarchy.num_classes();
  if (static_cast<int>(radii.size()) != C)
    fail_config("phantom needs one radius range per class (" + std::to_string(C) + ")");
  for (std::size_t c = 0; c < radii.size(); ++c) {
    if (!(radii[c].lo > 0.0 && radii[c].lo <= radii[c].hi))
      fail_config("radius range " + std::to_string(c) + " must satisfy 0 < lo <= hi");
    if (hierarchy.nesting() == Nesting::kChain && c > 0 && !(radii[c].hi < radii[c - 1].lo))
      fail_config("radius ranges cannot nest: class " + std::to_string(c) + " hi " + std::to_string(radii[c].hi) +
                  " must be below class " + std::to_string(c - 1) + " lo " + std::to_string(radii[c - 1].lo));
  }
  if (lumpiness < 0.0 || lumpiness >= 1.0) fail_config("lumpiness must be in [0, 1)");
  if (center_jitter < 0.0) fail_config("center_jitter must be >= 0");
  const std::size_t K = static_cast<std::size_t>(hierarchy.num_base_labels()) + 1;
  for (const auto* table : {&intensity_mean, &intensity_std}) {
    if (table->size() != K) fail_config("intensity tables need one row per label including background");
    for (const auto& row : *table)
      if (static_cast<int>(row.size()) != modalities) fail_config("intensity rows need one entry per modality");
  }
  for (const auto& row : intensity_std)
    for (double v : row)
      if (v < 0.0) fail_config("intensity std must be >= 0");
  if (noise_std < 0.0) fail_config("noise_std must be >= 0");
}

PhantomSpec PhantomSpec::cardiac() {
  PhantomSpec s;
  s.grid = {16, 32, 32};
  s.modalities = 1;
  s.hierarchy = ClassHierarchy::cardiac();
  s.radii = {{3.0, 5.0}, {3.0, 5.0}, {3.0, 5.0}};
  s.intensity_mean = {{0.2}, {0.7}, {0.4}, {0.9}};
  s.intensity_std = {{0.03}, {0.05}, {0.05}, {0.05}};
  return s;
}

void to_json(nlohmann::json& j, const PhantomSpec& s) {
  nlohmann::json radii = nlohmann::json::array();
  for (const auto& r : s.radii) radii.push_back({r.lo, r.hi});
  j = nlohmann::json{{"schema_version", 1},
                     {"grid", {s.grid.d, s.grid.h, s.grid.w}},
                     {"modalities", s.modalities},
                     {"hierarchy", s.hierarchy},
                     {"radii", radii},
                     {"lumpiness", s.lumpiness},
                     {"center_jitter", s.center_jitter},
                     {"intensity_mean", s.intensity_mean},
                     {"intensity_std", s.intensity_std},
                     {"noise_std", s.noise_std},
                     {"seed", s.seed}};
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  try {
    PhantomSpec s;
    if (j.contains("hierarchy")) {
      const auto& h = j.at("hierarchy");
      if (h.is_string()) {
        const auto name = h.get<std::string>();
        if (name == "cardiac") s = PhantomSpec::cardiac();
        else if (name == "binary") {
          s.hierarchy = ClassHierarchy::binary();
          s.radii = {{6.0, 10.0}};
          s.intensity_mean = {{0.2, 0.2}, {0.8, 0.6}};
          s.intensity_std = {{0.03, 0.03}, {0.05, 0.05}};
        } else if (name != "brats") fail_config("unknown hierarchy preset '" + name + "'");
      } else {
        s.hierarchy = hierarchy_from_json(h);
      }
    }
    if (j.contains("grid")) {
      const auto g = j.at("grid").get<std::vector<int>>();
      if (g.size() != 3) fail_config("grid must have three entries");
      s.grid = {g[0], g[1], g[2]};
    }
    s.modalities = j.value("modalities", s.modalities);
    if (j.contains("radii")) {
      s.radii.clear();
      for (const auto& r : j.at("radii")) s.radii.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    }
    s.lumpiness = j.value("lumpiness", s.lumpiness);
    s.center_jitter = j.value("center_jitter", s.center_jitter);
    s.intensity_mean = j.value("intensity_mean", s.intensity_mean);
    s.intensity_std = j.value("intensity_std", s.intensity_std);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("phantom spec: ") + e.what());
  }
}

std::pair<Volume, LabelMask> generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Grid g = spec.grid;
  const auto& h = spec.hierarchy;
  const int C = h.num_classes();
  const Vec3 mid{(g.d - 1) / 2.0, (g.h - 1) / 2.0, (g.w - 1) / 2.0};
  auto jitter = [&](double amount) {
    Vec3 c = mid;
    for (auto& x : c) x += uniform(rng, -amount, amount);
    return c;
  };

  std::vector<Lumpy> shapes;
  if (h.nesting() == Nesting::kChain) {
    Vec3 c = jitter(spec.center_jitter);
    for (int k = 0; k < C; ++k) {
      // Inner shapes drift inside the outer one by at most the radius gap.
      if (k > 0) {
        const double gap = 0.3 * (spec.radii[k - 1].lo - spec.radii[k].hi);
        for (auto& x : c) x += uniform(rng, -gap, gap);
      }
      shapes.emplace_back(c, spec.radii[k], spec.lumpiness, rng);
    }
  } else {
    // Antichain: centres spread along a random in-plane direction.
    const Vec3 dir = random_unit(rng);
    const Vec3 base = jitter(spec.center_jitter);
    for (int k = 0; k < C; ++k) {
      const double offset = (k - (C - 1) / 2.0) * 2.2 * spec.radii[k].hi;
      Vec3 c = base;
      for (int a = 0; a < 3; ++a) c[a] += offset * dir[a] * (a == 0 ? 0.3 : 1.0);
      shapes.emplace_back(c, spec.radii[k], spec.lumpiness, rng);
    }
  }

  std::vector<Label> labels(g.voxels(), 0);
  for (int z = 0; z < g.d; ++z)
    for (int y = 0; y < g.h; ++y)
      for (int x = 0; x < g.w; ++x) {
        Label l = 0;
        if (h.nesting() == Nesting::kChain) {
          // Deepest class whose shape and all outer shapes contain the voxel.
          for (int k = 0; k < C && shapes[k].contains(z, y, x); ++k) l = h.representative(k);
        } else {
          for (int k = 0; k < C && l == 0; ++k)
            if (shapes[k].contains(z, y, x)) l = h.representative(k);
        }
        labels[g.index(z, y, x)] = l;
      }

  const std::size_t V = g.voxels();
  std::vector<float> image(static_cast<std::size_t>(spec.modalities) * V);
  std::normal_distribution<double> n01;
  for (std::size_t v = 0; v < V; ++v) {
    const int k = labels[v] == 0 ? 0 : h.base_index(labels[v]) + 1;
    for (int m = 0; m < spec.modalities; ++m) {
      double val = spec.intensity_mean[k][m];
      if (spec.intensity_std[k][m] > 0.0) val += spec.intensity_std[k][m] * n01(rng);
      if (spec.noise_std > 0.0) val += spec.noise_std * n01(rng);
      image[m * V + v] = static_cast<float>(val);
    }
  }
  std::vector<std::string> names;
  for (int m = 0; m < spec.modalities; ++m) names.push_back("M" + std::to_string(m + 1));
  return {Volume(g, std::move(image), kUnitSpacing, names), LabelMask(g, std::move(labels), h)};
}

}  // namespace segqc::datagen
