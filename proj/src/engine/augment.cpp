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

#include "segqc/engine/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "segqc/util/error.hpp"

namespace segqc::engine {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

Mat3 rotation(int axis, double deg) {
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

void check_p(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) fail_config(std::string("augmentation ") + name + " must be in [0, 1]");
}

bool fires(Rng& rng, double p) { return p > 0.0 && uniform(rng, 0.0, 1.0) < p; }

// Input position read by output voxel (z, y, x).
template <class Fn>
void for_each_source(Grid g, const GeometricTransform& t, Fn&& fn) {
  const double c[3] = {(g.d - 1) / 2.0, (g.h - 1) / 2.0, (g.w - 1) / 2.0};
  const int ext[3] = {g.d, g.h, g.w};
  std::size_t v = 0;
  for (int z = 0; z < g.d; ++z)
    for (int y = 0; y < g.h; ++y)
      for (int x = 0; x < g.w; ++x, ++v) {
        int q[3] = {z, y, x};
        double d[3];
        for (int a = 0; a < 3; ++a) {
          if (t.mirror[a]) q[a] = ext[a] - 1 - q[a];
          d[a] = q[a] - c[a];
        }
        double p[3];
        for (int a = 0; a < 3; ++a)
          p[a] = t.matrix[a][0] * d[0] + t.matrix[a][1] * d[1] + t.matrix[a][2] * d[2] + c[a];
        fn(v, p);
      }
}

}  // namespace

void AugmentConfig::validate() const {
  check_p(rotation_p, "rotation_p");
  check_p(scale_p, "scale_p");
  check_p(mirror_p, "mirror_p");
  check_p(noise_p, "noise_p");
  check_p(gamma_p, "gamma_p");
  if (!(rotation_deg >= 0.0)) fail_config("augmentation rotation_deg must be >= 0");
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) fail_config("augmentation scale range must be positive and ordered");
  if (!(gamma_lo > 0.0 && gamma_lo <= gamma_hi)) fail_config("augmentation gamma range must be positive and ordered");
  if (!(noise_std_max >= 0.0)) fail_config("augmentation noise_std_max must be >= 0");
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = nlohmann::json{{"enabled", c.enabled},       {"rotation_p", c.rotation_p}, {"rotation_deg", c.rotation_deg},
                     {"scale_p", c.scale_p},       {"scale", {c.scale_lo, c.scale_hi}},
                     {"mirror_p", c.mirror_p},     {"noise_p", c.noise_p},       {"noise_std_max", c.noise_std_max},
                     {"gamma_p", c.gamma_p},       {"gamma", {c.gamma_lo, c.gamma_hi}}};
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  try {
    c = AugmentConfig{};
    c.enabled = j.value("enabled", c.enabled);
    c.rotation_p = j.value("rotation_p", c.rotation_p);
    c.rotation_deg = j.value("rotation_deg", c.rotation_deg);
    c.scale_p = j.value("scale_p", c.scale_p);
    if (j.contains("scale")) {
      c.scale_lo = j.at("scale").at(0).get<double>();
      c.scale_hi = j.at("scale").at(1).get<double>();
    }
    c.mirror_p = j.value("mirror_p", c.mirror_p);
    c.noise_p = j.value("noise_p", c.noise_p);
    c.noise_std_max = j.value("noise_std_max", c.noise_std_max);
    c.gamma_p = j.value("gamma_p", c.gamma_p);
    if (j.contains("gamma")) {
      c.gamma_lo = j.at("gamma").at(0).get<double>();
      c.gamma_hi = j.at("gamma").at(1).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("augmentation config: ") + e.what());
  }
  c.validate();
}

bool GeometricTransform::identity() const noexcept {
  for (int i = 0; i < 3; ++i) {
    if (mirror[i]) return false;
    for (int k = 0; k < 3; ++k)
      if (matrix[i][k] != (i == k ? 1.0 : 0.0)) return false;
  }
  return true;
}

GeometricTransform sample_geometric(const AugmentConfig& cfg, Rng& rng) {
  GeometricTransform t;
  if (!cfg.enabled) return t;
  if (fires(rng, cfg.rotation_p)) {
    Mat3 r = rotation(0, uniform(rng, -cfg.rotation_deg, cfg.rotation_deg));
    r = mul(rotation(1, uniform(rng, -cfg.rotation_deg, cfg.rotation_deg)), r);
    r = mul(rotation(2, uniform(rng, -cfg.rotation_deg, cfg.rotation_deg)), r);
    t.matrix = r;
  }
  if (fires(rng, cfg.scale_p)) {
    // Output is the input magnified by s, so sources move inwards by 1/s.
    const double s = uniform(rng, cfg.scale_lo, cfg.scale_hi);
    for (auto& row : t.matrix)
      for (double& v : row) v /= s;
  }
  for (int a = 0; a < 3; ++a) t.mirror[a] = fires(rng, cfg.mirror_p);
  return t;
}

LabelMask apply_geometric(const LabelMask& mask, const GeometricTransform& t) {
  if (t.identity()) return mask;
  const Grid g = mask.grid();
  std::vector<Label> out(g.voxels(), 0);
  const auto in = mask.data();
  for_each_source(g, t, [&](std::size_t v, const double* p) {
    const long z = std::lround(p[0]), y = std::lround(p[1]), x = std::lround(p[2]);
    if (g.contains(static_cast<int>(z), static_cast<int>(y), static_cast<int>(x)))
      out[v] = in[g.index(static_cast<int>(z), static_cast<int>(y), static_cast<int>(x))];
  });
  return LabelMask(g, std::move(out), mask.hierarchy(), mask.spacing());
}

Volume apply_geometric(const Volume& image, const GeometricTransform& t) {
  if (t.identity()) return image;
  const Grid g = image.grid();
  const std::size_t n = g.voxels();
  std::vector<float> out(image.data().size());
  for_each_source(g, t, [&](std::size_t v, const double* p) {
    int lo[3];
    double f[3];
    const int ext[3] = {g.d, g.h, g.w};
    for (int a = 0; a < 3; ++a) {
      const double q = std::clamp(p[a], 0.0, static_cast<double>(ext[a] - 1));
      lo[a] = std::min(static_cast<int>(q), ext[a] - 1);
      f[a] = q - lo[a];
    }
    const int hi[3] = {std::min(lo[0] + 1, g.d - 1), std::min(lo[1] + 1, g.h - 1), std::min(lo[2] + 1, g.w - 1)};
    for (int m = 0; m < image.channels(); ++m) {
      const auto ch = image.channel(m);
      double acc = 0.0;
      for (int corner = 0; corner < 8; ++corner) {
        const int z = corner & 4 ? hi[0] : lo[0], y = corner & 2 ? hi[1] : lo[1], x = corner & 1 ? hi[2] : lo[2];
        const double wgt = (corner & 4 ? f[0] : 1 - f[0]) * (corner & 2 ? f[1] : 1 - f[1]) *
                           (corner & 1 ? f[2] : 1 - f[2]);
        acc += wgt * ch[g.index(z, y, x)];
      }
      out[static_cast<std::size_t>(m) * n + v] = static_cast<float>(acc);
    }
  });
  return Volume(g, std::move(out), image.spacing(), image.modality_names());
}

Volume apply_intensity(const Volume& image, const AugmentConfig& cfg, Rng& rng) {
  if (!cfg.enabled) return image;
  std::vector<float> data(image.data().begin(), image.data().end());
  const std::size_t n = image.grid().voxels();
  bool changed = false;
  for (int m = 0; m < image.channels(); ++m) {
    float* ch = data.data() + static_cast<std::size_t>(m) * n;
    if (fires(rng, cfg.noise_p)) {
      double mean = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += ch[i];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) sq += (ch[i] - mean) * (ch[i] - mean);
      const double sd = std::sqrt(sq / static_cast<double>(n)) * uniform(rng, 0.0, cfg.noise_std_max);
      std::normal_distribution<double> noise(0.0, 1.0);
      for (std::size_t i = 0; i < n; ++i) ch[i] += static_cast<float>(sd * noise(rng));
      changed = true;
    }
    if (fires(rng, cfg.gamma_p)) {
      const double gamma = uniform(rng, cfg.gamma_lo, cfg.gamma_hi);
      const auto [lo_it, hi_it] = std::minmax_element(ch, ch + n);
      const double lo = *lo_it, range = *hi_it - lo;
      if (range > 0.0)
        for (std::size_t i = 0; i < n; ++i) ch[i] = static_cast<float>(lo + range * std::pow((ch[i] - lo) / range, gamma));
      changed = true;
    }
  }
  if (!changed) return image;
  return Volume(image.grid(), std::move(data), image.spacing(), image.modality_names());
}

AugmentedTriple augment(const Volume& image, const LabelMask& query, const LabelMask& gt, const AugmentConfig& cfg,
                        Rng& rng) {
  if (!(image.grid() == query.grid() && query.grid() == gt.grid()))
    fail_data("augmentation needs image, query and ground truth on one grid");
  const auto t = sample_geometric(cfg, rng);
  return {apply_intensity(apply_geometric(image, t), cfg, rng), apply_geometric(query, t), apply_geometric(gt, t)};
}

}  // namespace segqc::engine
