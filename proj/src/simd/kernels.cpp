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

#include <cstdlib>
#include <cstring>
#include <string>

namespace segqc::simd {

namespace {

void axpy_scalar(float a, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const float* x, const float* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(x[i]) * y[i];
  return s;
}

void sum_sumsq_scalar(const float* x, std::size_t n, double* sum, double* sumsq) {
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += x[i];
    ss += static_cast<double>(x[i]) * x[i];
  }
  *sum = s;
  *sumsq = ss;
}

void affine_scalar(const float* x, float a, float b, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

void axpbypc_scalar(float a, const float* p, float b, const float* q, float c, float* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += a * p[i] + b * q[i] + c;
}

void leaky_relu_scalar(const float* x, float slope, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_grad_scalar(const float* x, const float* g, float slope, float* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0f ? g[i] : slope * g[i];
}

void conv3_row_scalar(float* out, std::size_t n, const float* const taps[3], std::ptrdiff_t row,
                      std::ptrdiff_t plane, const float* w) {
  for (int kz = 0; kz < 3; ++kz)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const float wk = w[9 * kz + 3 * ky + kx];
        const float* src = taps[kx] + kz * plane + ky * row;
        for (std::size_t x = 0; x < n; ++x) out[x] += wk * src[x];
      }
}

void conv3_plane_wgrad_scalar(const float* g, std::size_t n, std::size_t rows, const float* const taps[3],
                              std::ptrdiff_t step, std::ptrdiff_t row, std::ptrdiff_t plane, float* dw) {
  for (int kz = 0; kz < 3; ++kz)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          const float* src = taps[kx] + static_cast<std::ptrdiff_t>(r) * step + kz * plane + ky * row;
          const float* gr = g + r * n;
          for (std::size_t x = 0; x < n; ++x) s += static_cast<double>(gr[x]) * src[x];
        }
        dw[9 * kz + 3 * ky + kx] += static_cast<float>(s);
      }
}

const Kernels kScalar{
    "scalar",          axpy_scalar,        dot_scalar,       sum_sumsq_scalar,
    affine_scalar,     axpbypc_scalar,     leaky_relu_scalar, leaky_relu_grad_scalar,
    conv3_row_scalar,  conv3_plane_wgrad_scalar,
};

const Kernels* select_default() {
  if (const char* env = std::getenv("SEGQC_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
    if (want == "neon" && neon_kernels()) return neon_kernels();
  }
  if (const Kernels* k = avx2_kernels()) return k;
  if (const Kernels* k = neon_kernels()) return k;
  return &kScalar;
}

const Kernels*& active_slot() {
  static const Kernels* slot = select_default();
  return slot;
}

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

const Kernels& active() { return *active_slot(); }

void set_active(const Kernels& k) { active_slot() = &k; }

}  // namespace segqc::simd
