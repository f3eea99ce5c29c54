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

// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include "segqc/simd/kernels.hpp"

#if defined(SEGQC_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>

namespace segqc::simd {

namespace {

inline double hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  const __m256d d = _mm256_add_pd(_mm256_cvtps_pd(lo), _mm256_cvtps_pd(hi));
  const __m128d s = _mm_add_pd(_mm256_castpd256_pd128(d), _mm256_extractf128_pd(d, 1));
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void axpy_avx2(float a, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    _mm256_storeu_ps(y + i + 8, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8)));
  }
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const float* x, const float* y, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  double s = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) s += static_cast<double>(x[i]) * y[i];
  return s;
}

// Blocks of 256 keep float lane sums short before widening to double.
void sum_sumsq_avx2(const float* x, std::size_t n, double* sum, double* sumsq) {
  double s = 0.0, ss = 0.0;
  std::size_t i = 0;
  while (i + 8 <= n) {
    __m256 a = _mm256_setzero_ps(), b = _mm256_setzero_ps();
    const std::size_t end = std::min(n, i + 256) & ~static_cast<std::size_t>(7);
    for (; i < end; i += 8) {
      const __m256 v = _mm256_loadu_ps(x + i);
      a = _mm256_add_ps(a, v);
      b = _mm256_fmadd_ps(v, v, b);
    }
    s += hsum(a);
    ss += hsum(b);
  }
  for (; i < n; ++i) {
    s += x[i];
    ss += static_cast<double>(x[i]) * x[i];
  }
  *sum = s;
  *sumsq = ss;
}

void affine_avx2(const float* x, float a, float b, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a), vb = _mm256_set1_ps(b);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vb));
  for (; i < n; ++i) y[i] = a * x[i] + b;
}

void axpbypc_avx2(float a, const float* p, float b, const float* q, float c, float* dst, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a), vb = _mm256_set1_ps(b), vc = _mm256_set1_ps(c);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_fmadd_ps(va, _mm256_loadu_ps(p + i), vc);
    t = _mm256_fmadd_ps(vb, _mm256_loadu_ps(q + i), t);
    _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(dst + i), t));
  }
  for (; i < n; ++i) dst[i] += a * p[i] + b * q[i] + c;
}

void leaky_relu_avx2(const float* x, float slope, float* y, std::size_t n) {
  const __m256 vs = _mm256_set1_ps(slope), zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 pos = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
    _mm256_storeu_ps(y + i, _mm256_blendv_ps(_mm256_mul_ps(v, vs), v, pos));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_grad_avx2(const float* x, const float* g, float slope, float* dx, std::size_t n) {
  const __m256 vs = _mm256_set1_ps(slope), zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 pos = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 vg = _mm256_loadu_ps(g + i);
    const __m256 d = _mm256_blendv_ps(_mm256_mul_ps(vg, vs), vg, pos);
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), d));
  }
  for (; i < n; ++i) dx[i] += x[i] > 0.0f ? g[i] : slope * g[i];
}

void conv3_row_avx2(float* out, std::size_t n, const float* const taps[3], std::ptrdiff_t row,
                    std::ptrdiff_t plane, const float* w) {
  std::size_t x = 0;
  for (; x + 32 <= n; x += 32) {
    __m256 a0 = _mm256_loadu_ps(out + x), a1 = _mm256_loadu_ps(out + x + 8);
    __m256 a2 = _mm256_loadu_ps(out + x + 16), a3 = _mm256_loadu_ps(out + x + 24);
    for (int kz = 0; kz < 3; ++kz)
      for (int ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t off = kz * plane + ky * row + static_cast<std::ptrdiff_t>(x);
        for (int kx = 0; kx < 3; ++kx) {
          const __m256 wk = _mm256_set1_ps(w[9 * kz + 3 * ky + kx]);
          const float* s = taps[kx] + off;
          a0 = _mm256_fmadd_ps(wk, _mm256_loadu_ps(s), a0);
          a1 = _mm256_fmadd_ps(wk, _mm256_loadu_ps(s + 8), a1);
          a2 = _mm256_fmadd_ps(wk, _mm256_loadu_ps(s + 16), a2);
          a3 = _mm256_fmadd_ps(wk, _mm256_loadu_ps(s + 24), a3);
        }
      }
    _mm256_storeu_ps(out + x, a0);
    _mm256_storeu_ps(out + x + 8, a1);
    _mm256_storeu_ps(out + x + 16, a2);
    _mm256_storeu_ps(out + x + 24, a3);
  }
  for (; x + 8 <= n; x += 8) {
    __m256 a0 = _mm256_loadu_ps(out + x);
    for (int kz = 0; kz < 3; ++kz)
      for (int ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t off = kz * plane + ky * row + static_cast<std::ptrdiff_t>(x);
        for (int kx = 0; kx < 3; ++kx)
          a0 = _mm256_fmadd_ps(_mm256_set1_ps(w[9 * kz + 3 * ky + kx]), _mm256_loadu_ps(taps[kx] + off), a0);
      }
    _mm256_storeu_ps(out + x, a0);
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

void conv3_plane_wgrad_avx2(const float* g, std::size_t n, std::size_t rows, const float* const taps[3],
                            std::ptrdiff_t step, std::ptrdiff_t row, std::ptrdiff_t plane, float* dw) {
  for (int kz = 0; kz < 3; ++kz) {
    __m256 acc[9];
    for (auto& a : acc) a = _mm256_setzero_ps();
    double tail[9] = {};
    for (std::size_t r = 0; r < rows; ++r) {
      const float* gr = g + r * n;
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(r) * step + kz * plane;
      std::size_t x = 0;
      for (; x + 8 <= n; x += 8) {
        const __m256 vg = _mm256_loadu_ps(gr + x);
        for (int ky = 0; ky < 3; ++ky) {
          const std::ptrdiff_t off = base + ky * row + static_cast<std::ptrdiff_t>(x);
          for (int kx = 0; kx < 3; ++kx)
            acc[3 * ky + kx] = _mm256_fmadd_ps(vg, _mm256_loadu_ps(taps[kx] + off), acc[3 * ky + kx]);
        }
      }
      for (; x < n; ++x)
        for (int k = 0; k < 9; ++k)
          tail[k] += static_cast<double>(gr[x]) *
                     taps[k % 3][base + (k / 3) * row + static_cast<std::ptrdiff_t>(x)];
    }
    for (int k = 0; k < 9; ++k) dw[9 * kz + k] += static_cast<float>(hsum(acc[k]) + tail[k]);
  }
}

const Kernels kAvx2{
    "avx2",          axpy_avx2,        dot_avx2,        sum_sumsq_avx2,
    affine_avx2,     axpbypc_avx2,     leaky_relu_avx2, leaky_relu_grad_avx2,
    conv3_row_avx2,  conv3_plane_wgrad_avx2,
};

}  // namespace

const Kernels* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
}

}  // namespace segqc::simd

#else

namespace segqc::simd {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace segqc::simd

#endif
