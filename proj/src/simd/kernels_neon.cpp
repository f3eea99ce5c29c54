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

#include "segqc/simd/kernels.hpp"

#if defined(__ARM_NEON) && defined(__aarch64__)

#include <arm_neon.h>

namespace segqc::simd {

namespace {

void axpy_neon(float a, const float* x, float* y, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_neon(const float* x, const float* y, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(x + i), vld1q_f32(y + i));
  double s = static_cast<double>(vaddvq_f32(acc));
  for (; i < n; ++i) s += static_cast<double>(x[i]) * y[i];
  return s;
}

void sum_sumsq_neon(const float* x, std::size_t n, double* sum, double* sumsq) {
  double s = 0.0, ss = 0.0;
  std::size_t i = 0;
  while (i + 4 <= n) {
    float32x4_t a = vdupq_n_f32(0.0f), b = vdupq_n_f32(0.0f);
    const std::size_t end = (n < i + 256 ? n : i + 256) & ~static_cast<std::size_t>(3);
    for (; i < end; i += 4) {
      const float32x4_t v = vld1q_f32(x + i);
      a = vaddq_f32(a, v);
      b = vfmaq_f32(b, v, v);
    }
    s += vaddvq_f32(a);
    ss += vaddvq_f32(b);
  }
  for (; i < n; ++i) {
    s += x[i];
    ss += static_cast<double>(x[i]) * x[i];
  }
  *sum = s;
  *sumsq = ss;
}

void affine_neon(const float* x, float a, float b, float* y, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(a), vb = vdupq_n_f32(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vb, va, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] = a * x[i] + b;
}

void axpbypc_neon(float a, const float* p, float b, const float* q, float c, float* dst, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(a), vb = vdupq_n_f32(b), vc = vdupq_n_f32(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t t = vfmaq_f32(vc, va, vld1q_f32(p + i));
    t = vfmaq_f32(t, vb, vld1q_f32(q + i));
    vst1q_f32(dst + i, vaddq_f32(vld1q_f32(dst + i), t));
  }
  for (; i < n; ++i) dst[i] += a * p[i] + b * q[i] + c;
}

void leaky_relu_neon(const float* x, float slope, float* y, std::size_t n) {
  const float32x4_t vs = vdupq_n_f32(slope), zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    vst1q_f32(y + i, vbslq_f32(vcgtq_f32(v, zero), v, vmulq_f32(v, vs)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_grad_neon(const float* x, const float* g, float slope, float* dx, std::size_t n) {
  const float32x4_t vs = vdupq_n_f32(slope), zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t vg = vld1q_f32(g + i);
    const float32x4_t d = vbslq_f32(vcgtq_f32(vld1q_f32(x + i), zero), vg, vmulq_f32(vg, vs));
    vst1q_f32(dx + i, vaddq_f32(vld1q_f32(dx + i), d));
  }
  for (; i < n; ++i) dx[i] += x[i] > 0.0f ? g[i] : slope * g[i];
}

void conv3_row_neon(float* out, std::size_t n, const float* const taps[3], std::ptrdiff_t row,
                    std::ptrdiff_t plane, const float* w) {
  std::size_t x = 0;
  for (; x + 4 <= n; x += 4) {
    float32x4_t acc = vld1q_f32(out + x);
    for (int kz = 0; kz < 3; ++kz)
      for (int ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t off = kz * plane + ky * row + static_cast<std::ptrdiff_t>(x);
        for (int kx = 0; kx < 3; ++kx)
          acc = vfmaq_f32(acc, vdupq_n_f32(w[9 * kz + 3 * ky + kx]), vld1q_f32(taps[kx] + off));
      }
    vst1q_f32(out + x, acc);
  }
  for (; x < n; ++x) {
    float acc = out[x];
    for (int kz = 0; kz < 3; ++kz)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
          acc += w[9 * kz + 3 * ky + kx] * taps[kx][kz * plane + ky * row + static_cast<std::ptrdiff_t>(x)];
    out[x] = acc;
  }
}

void conv3_plane_wgrad_neon(const float* g, std::size_t n, std::size_t rows, const float* const taps[3],
                            std::ptrdiff_t step, std::ptrdiff_t row, std::ptrdiff_t plane, float* dw) {
  for (int k = 0; k < 27; ++k) {
    const int kz = k / 9, ky = (k / 3) % 3, kx = k % 3;
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
      s += dot_neon(g + r * n, taps[kx] + static_cast<std::ptrdiff_t>(r) * step + kz * plane + ky * row, n);
    dw[k] += static_cast<float>(s);
  }
}

const Kernels kNeon{
    "neon",          axpy_neon,        dot_neon,        sum_sumsq_neon,
    affine_neon,     axpbypc_neon,     leaky_relu_neon, leaky_relu_grad_neon,
    conv3_row_neon,  conv3_plane_wgrad_neon,
};

}  // namespace

const Kernels* neon_kernels() { return &kNeon; }

}  // namespace segqc::simd

#else

namespace segqc::simd {
const Kernels* neon_kernels() { return nullptr; }
}  // namespace segqc::simd

#endif
