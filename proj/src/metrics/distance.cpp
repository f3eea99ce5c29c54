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

#include "segqc/metrics/distance.hpp"

#include <limits>

namespace segqc::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D lower envelope of parabolas (Felzenszwalb & Huttenlocher) with axis
// weight s2 = spacing^2. Reads f[0..n) with `stride`, writes in place.
void edt_1d(double* f, int n, std::ptrdiff_t stride, double s2, std::vector<double>& buf,
            std::vector<int>& v, std::vector<double>& z) {
  buf.resize(n);
  v.resize(n);
  z.resize(n + 1);
  for (int i = 0; i < n; ++i) buf[i] = f[i * stride];
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (buf[q] == kInf) continue;
    double s = 0.0;
    while (k >= 0) {
      const int p = v[k];
      s = ((buf[q] + s2 * q * q) - (buf[p] + s2 * p * p)) / (2.0 * s2 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) return;  // no finite samples on this line
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    f[q * stride] = buf[v[j]] + s2 * d * d;
  }
}

}  // namespace

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> features, Grid grid,
                                               Spacing spacing) {
  std::vector<double> f(grid.voxels());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = features[i] ? 0.0 : kInf;
  std::vector<double> buf, z;
  std::vector<int> v;
  const std::ptrdiff_t sx = 1, sy = grid.w, sz = static_cast<std::ptrdiff_t>(grid.w) * grid.h;
  for (int zz = 0; zz < grid.d; ++zz)
    for (int y = 0; y < grid.h; ++y)
      edt_1d(f.data() + grid.index(zz, y, 0), grid.w, sx, spacing[2] * spacing[2], buf, v, z);
  for (int zz = 0; zz < grid.d; ++zz)
    for (int x = 0; x < grid.w; ++x)
      edt_1d(f.data() + grid.index(zz, 0, x), grid.h, sy, spacing[1] * spacing[1], buf, v, z);
  for (int y = 0; y < grid.h; ++y)
    for (int x = 0; x < grid.w; ++x)
      edt_1d(f.data() + grid.index(0, y, x), grid.d, sz, spacing[0] * spacing[0], buf, v, z);
  return f;
}

std::vector<std::uint8_t> boundary(std::span<const std::uint8_t> mask, Grid grid) {
  std::vector<std::uint8_t> out(grid.voxels(), 0);
  auto fg = [&](int z, int y, int x) { return grid.contains(z, y, x) && mask[grid.index(z, y, x)] != 0; };
  for (int z = 0; z < grid.d; ++z)
    for (int y = 0; y < grid.h; ++y)
      for (int x = 0; x < grid.w; ++x) {
        if (!fg(z, y, x)) continue;
        if (!fg(z - 1, y, x) || !fg(z + 1, y, x) || !fg(z, y - 1, x) || !fg(z, y + 1, x) ||
            !fg(z, y, x - 1) || !fg(z, y, x + 1))
          out[grid.index(z, y, x)] = 1;
      }
  return out;
}

}  // namespace segqc::metrics
