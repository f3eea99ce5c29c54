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

#include <doctest.h>

#include <random>
#include <vector>

#include "segqc/nn/ops.hpp"
#include "segqc/simd/kernels.hpp"

using namespace segqc;

namespace {

std::vector<float> randv(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<float> d;
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<const simd::Kernels*> variants() {
  std::vector<const simd::Kernels*> out;
  if (auto* k = simd::avx2_kernels()) out.push_back(k);
  if (auto* k = simd::neon_kernels()) out.push_back(k);
  return out;
}

void close(const std::vector<float>& a, const std::vector<float>& b, float tol = 1e-5f) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol).scale(1.0));
}

struct KernelScope {
  explicit KernelScope(const simd::Kernels& k) : prev(&simd::active()) { simd::set_active(k); }
  ~KernelScope() { simd::set_active(*prev); }
  const simd::Kernels* prev;
};

}  // namespace

TEST_CASE("vector kernels agree with scalar reference") {
  std::mt19937_64 rng(1);
  const auto& ref = simd::scalar_kernels();
  for (const auto* k : variants()) {
    INFO(k->name);
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 64u, 1000u, 1027u}) {
      const auto x = randv(n, rng), y0 = randv(n, rng);
      auto y1 = y0, y2 = y0;
      ref.axpy(0.7f, x.data(), y1.data(), n);
      k->axpy(0.7f, x.data(), y2.data(), n);
      close(y1, y2);
      CHECK(k->dot(x.data(), y0.data(), n) == doctest::Approx(ref.dot(x.data(), y0.data(), n)).epsilon(1e-5));
      double s1, q1, s2, q2;
      ref.sum_sumsq(x.data(), n, &s1, &q1);
      k->sum_sumsq(x.data(), n, &s2, &q2);
      CHECK(s1 == doctest::Approx(s2).epsilon(1e-5));
      CHECK(q1 == doctest::Approx(q2).epsilon(1e-5));
      y1.assign(n, 0.0f);
      y2.assign(n, 0.0f);
      ref.affine(x.data(), 1.5f, -0.25f, y1.data(), n);
      k->affine(x.data(), 1.5f, -0.25f, y2.data(), n);
      close(y1, y2);
      y1 = y0;
      y2 = y0;
      ref.axpbypc(0.3f, x.data(), -1.1f, y0.data(), 0.05f, y1.data(), n);
      k->axpbypc(0.3f, x.data(), -1.1f, y0.data(), 0.05f, y2.data(), n);
      close(y1, y2);
      ref.leaky_relu(x.data(), 0.01f, y1.data(), n);
      k->leaky_relu(x.data(), 0.01f, y2.data(), n);
      close(y1, y2);
      y1 = y0;
      y2 = y0;
      ref.leaky_relu_grad(x.data(), y0.data(), 0.01f, y1.data(), n);
      k->leaky_relu_grad(x.data(), y0.data(), 0.01f, y2.data(), n);
      close(y1, y2);
    }
  }
}

TEST_CASE("conv row kernels agree with scalar reference") {
  std::mt19937_64 rng(2);
  const auto& ref = simd::scalar_kernels();
  for (const auto* k : variants()) {
    INFO(k->name);
    for (std::size_t n : {1u, 5u, 8u, 17u, 32u, 33u, 66u}) {
      const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(n) + 2, plane = row * 3;
      auto buf = randv(static_cast<std::size_t>(plane * 3 + 4), rng);
      const auto w = randv(27, rng), g = randv(n, rng);
      const float* taps[3] = {buf.data(), buf.data() + 1, buf.data() + 2};
      auto o1 = randv(n, rng);
      auto o2 = o1;
      ref.conv3_row(o1.data(), n, taps, row, plane, w.data());
      k->conv3_row(o2.data(), n, taps, row, plane, w.data());
      close(o1, o2, 1e-4f);

      for (std::size_t rows : {1u, 3u}) {
        auto big = randv(static_cast<std::size_t>(plane * 3 + row * rows + 4), rng);
        const auto gg = randv(n * rows, rng);
        const float* bt[3] = {big.data(), big.data() + 1, big.data() + 2};
        std::vector<float> dw1(27, 0.5f), dw2(27, 0.5f);
        ref.conv3_plane_wgrad(gg.data(), n, rows, bt, row, row, plane, dw1.data());
        k->conv3_plane_wgrad(gg.data(), n, rows, bt, row, row, plane, dw2.data());
        close(dw1, dw2, 1e-4f);
      }
    }
  }
}

TEST_CASE("conv3d forward and backward identical across kernel sets") {
  std::mt19937_64 rng(3);
  for (const auto* k : variants()) {
    for (nn::Stride3 stride : {nn::Stride3{1, 1, 1}, nn::Stride3{2, 2, 2}, nn::Stride3{1, 2, 2}}) {
      for (int ksize : {27, 1}) {
        const nn::Shape xs{3, 4, 6, 8};
        const auto xv = randv(xs.numel(), rng), wv = randv(static_cast<std::size_t>(5 * 3 * ksize), rng),
                   bv = randv(5, rng);
        std::vector<float> out[2], gx[2], gw[2];
        for (int pass = 0; pass < 2; ++pass) {
          KernelScope scope(pass == 0 ? simd::scalar_kernels() : *k);
          auto x = nn::parameter(xs, xv, "x");
          auto w = nn::parameter({5, 3, ksize, 1}, wv, "w");
          auto b = nn::parameter(nn::Shape::vec(5), bv, "b");
          auto y = nn::conv3d(x, w, b, stride);
          std::vector<float> seed(y->value.size());
          for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = std::sin(static_cast<float>(i));
          nn::backward({{y, seed}});
          out[pass] = y->value;
          gx[pass] = x->grad;
          gw[pass] = w->grad;
        }
        close(out[0], out[1], 1e-4f);
        close(gx[0], gx[1], 1e-4f);
        close(gw[0], gw[1], 1e-4f);
      }
    }
  }
}

TEST_CASE("kernel selection") {
  CHECK(std::string(simd::scalar_kernels().name) == "scalar");
  const auto& before = simd::active();
  simd::set_active(simd::scalar_kernels());
  CHECK(&simd::active() == &simd::scalar_kernels());
  simd::set_active(before);
}
