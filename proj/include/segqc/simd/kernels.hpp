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

#include <cstddef>
#include <string_view>

namespace segqc::simd {

/// The data-parallel inner loops used by the network and metrics. Every
/// table entry has a scalar reference; vector variants must agree with it
/// up to float reassociation (see tests/simd_equivalence_test.cpp).
///
/// The conv3 row kernels work on one output row of a 3x3x3 correlation.
/// `taps[kx]` points at the input element feeding output x = 0 through
/// kernel column kx at kz = ky = 0; rows and planes of the input are
/// `row_pitch` / `plane_pitch` floats apart. Strided convolutions pass
/// phase-split inputs so every tap row is contiguous.
struct Kernels {
  const char* name;

  // y[i] += a * x[i]
  void (*axpy)(float a, const float* x, float* y, std::size_t n);
  // sum x[i] * y[i]
  double (*dot)(const float* x, const float* y, std::size_t n);
  // (sum x[i], sum x[i]^2)
  void (*sum_sumsq)(const float* x, std::size_t n, double* sum, double* sumsq);
  // y[i] = a * x[i] + b
  void (*affine)(const float* x, float a, float b, float* y, std::size_t n);
  // dst[i] += a * p[i] + b * q[i] + c
  void (*axpbypc)(float a, const float* p, float b, const float* q, float c, float* dst, std::size_t n);
  // y[i] = x[i] > 0 ? x[i] : slope * x[i]
  void (*leaky_relu)(const float* x, float slope, float* y, std::size_t n);
  // dx[i] += g[i] * (x[i] > 0 ? 1 : slope)
  void (*leaky_relu_grad)(const float* x, const float* g, float slope, float* dx, std::size_t n);

  // out[x] += sum_{kz,ky,kx} w[9kz+3ky+kx] * taps[kx][kz*plane + ky*row + x]
  void (*conv3_row)(float* out, std::size_t n, const float* const taps[3], std::ptrdiff_t row_pitch,
                    std::ptrdiff_t plane_pitch, const float* w27);
  // dw[9kz+3ky+kx] += sum_r sum_x g[r*n + x] * taps[kx][r*tap_row_step + kz*plane + ky*row + x]
  void (*conv3_plane_wgrad)(const float* g, std::size_t n, std::size_t rows, const float* const taps[3],
                            std::ptrdiff_t tap_row_step, std::ptrdiff_t row_pitch, std::ptrdiff_t plane_pitch,
                            float* dw27);
};

const Kernels& scalar_kernels();
/// nullptr when the variant was not built or the CPU lacks the features.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

/// The table used by the library: the best supported variant, unless the
/// SEGQC_SIMD environment variable forces "scalar" (or "avx2"/"neon").
const Kernels& active();

/// Overrides the active table (tests and benchmarks). Not thread-safe with
/// concurrent kernel use.
void set_active(const Kernels& k);

}  // namespace segqc::simd
