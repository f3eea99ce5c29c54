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

// Brute-force reference computations shared by unit and acceptance tests.
// Deliberately naive: set containers, explicit loops, no shared code paths
// with the library implementations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "segqc/core/encoding.hpp"
#include "segqc/core/masks.hpp"

namespace oracle {

using segqc::Grid;
using segqc::Label;

inline segqc::LabelMask random_mask(Grid g, const segqc::ClassHierarchy& h, std::mt19937_64& rng,
                                    double p_background = 0.4) {
  std::vector<Label> codes;
  for (const auto& b : h.base_labels()) codes.push_back(b.code);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, codes.size() - 1);
  std::vector<Label> d(g.voxels());
  for (auto& v : d) v = u(rng) < p_background ? 0 : codes[pick(rng)];
  return segqc::LabelMask(g, std::move(d), h);
}

// Blobby mask: random spheres, so boundaries have realistic structure.
inline segqc::LabelMask blob_mask(Grid g, const segqc::ClassHierarchy& h, std::mt19937_64& rng, int blobs = 3) {
  std::vector<Label> d(g.voxels(), 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int b = 0; b < blobs; ++b) {
    const double cz = u(rng) * g.d, cy = u(rng) * g.h, cx = u(rng) * g.w;
    const double r = 1.0 + u(rng) * g.d / 3.0;
    const Label code = h.base_labels()[static_cast<std::size_t>(u(rng) * h.base_labels().size()) %
                                       h.base_labels().size()].code;
    for (int z = 0; z < g.d; ++z)
      for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x)
          if ((z - cz) * (z - cz) + (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) d[g.index(z, y, x)] = code;
  }
  return segqc::LabelMask(g, std::move(d), h);
}

inline bool in_class(const segqc::ClassHierarchy& h, int c, Label l) {
  const auto& m = h.classes()[static_cast<std::size_t>(c)].members;
  return l != 0 && std::find(m.begin(), m.end(), l) != m.end();
}

inline double multiclass_dsc(const segqc::LabelMask& q, const segqc::LabelMask& g) {
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < q.data().size(); ++i) {
    const Label a = q.data()[i], b = g.data()[i];
    if (a != 0 && a == b) ++tp;
    if (a != 0 && a != b) ++fp;
    if (b != 0 && a != b) ++fn;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

inline std::set<std::size_t> voxel_set(const std::vector<std::uint8_t>& m) {
  std::set<std::size_t> s;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) s.insert(i);
  return s;
}

inline double set_dice(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return 2.0 * both.size() / static_cast<double>(a.size() + b.size());
}

// Channel c of the error map as a plain byte vector.
inline std::vector<std::uint8_t> sem_channel(const segqc::LabelMask& q, const segqc::LabelMask& g, int c) {
  std::vector<std::uint8_t> out(q.data().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = in_class(q.hierarchy(), c, q.data()[i]) != in_class(g.hierarchy(), c, g.data()[i]);
  return out;
}

inline std::vector<std::uint8_t> class_channel(const segqc::LabelMask& m, int c) {
  std::vector<std::uint8_t> out(m.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in_class(m.hierarchy(), c, m.data()[i]);
  return out;
}

struct P3 {
  int z, y, x;
};

inline std::vector<P3> boundary_points(const std::vector<std::uint8_t>& m, Grid g) {
  std::vector<P3> pts;
  auto fg = [&](int z, int y, int x) { return g.contains(z, y, x) && m[g.index(z, y, x)]; };
  for (int z = 0; z < g.d; ++z)
    for (int y = 0; y < g.h; ++y)
      for (int x = 0; x < g.w; ++x) {
        if (!fg(z, y, x)) continue;
        if (!fg(z - 1, y, x) || !fg(z + 1, y, x) || !fg(z, y - 1, x) || !fg(z, y + 1, x) || !fg(z, y, x - 1) ||
            !fg(z, y, x + 1))
          pts.push_back({z, y, x});
      }
  return pts;
}

// O(B^2) surface dice.
inline double surface_dice(const std::vector<std::uint8_t>& q, const std::vector<std::uint8_t>& gt, Grid g,
                           double tol, std::array<double, 3> sp = {1, 1, 1}) {
  const auto bq = boundary_points(q, g), bg = boundary_points(gt, g);
  if (bq.empty() && bg.empty()) return 1.0;
  if (bq.empty() || bg.empty()) return 0.0;
  auto within = [&](const P3& p, const std::vector<P3>& other) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : other) {
      const double dz = (p.z - o.z) * sp[0], dy = (p.y - o.y) * sp[1], dx = (p.x - o.x) * sp[2];
      best = std::min(best, std::sqrt(dz * dz + dy * dy + dx * dx));
    }
    return best <= tol;
  };
  long hits = 0;
  for (const auto& p : bq) hits += within(p, bg);
  for (const auto& p : bg) hits += within(p, bq);
  return hits / static_cast<double>(bq.size() + bg.size());
}

}  // namespace oracle
