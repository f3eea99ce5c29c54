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

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "segqc/nn/ops.hpp"
#include "segqc/nn/params.hpp"
#include "segqc/util/error.hpp"

using namespace segqc;
using namespace segqc::nn;

namespace {

std::vector<float> randv(std::size_t n, std::mt19937_64& rng, float scale = 1.0f) {
  std::normal_distribution<float> d(0.0f, scale);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

using Fn = std::function<Var(const std::vector<Var>&)>;

// Compares autograd against central differences of sum(r * f(inputs)).
void grad_check(const Fn& f, std::vector<Var> inputs, std::mt19937_64& rng, double tol = 2e-2) {
  const Var y0 = f(inputs);
  const auto r = randv(y0->value.size(), rng);
  auto objective = [&] {
    NoGradGuard guard;
    const Var y = f(inputs);
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += static_cast<double>(r[i]) * y->value[i];
    return s;
  };
  for (auto& in : inputs) in->zero_grad();
  backward({{f(inputs), r}});
  for (const auto& in : inputs) {
    if (!in->requires_grad) continue;
    REQUIRE(in->has_grad());
    const auto analytic = in->grad;
    for (std::size_t i = 0; i < in->value.size(); ++i) {
      const float keep = in->value[i];
      const float h = 1e-2f * std::max(1.0f, std::abs(keep));
      in->value[i] = keep + h;
      const double up = objective();
      in->value[i] = keep - h;
      const double dn = objective();
      in->value[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double err = std::abs(fd - analytic[i]) / std::max(1.0, std::abs(fd));
      INFO("input " << in->name << " element " << i << " fd " << fd << " analytic " << analytic[i]);
      CHECK(err <= tol);
    }
  }
}

// Loop-based convolution, zero padding 1 for k=3.
std::vector<float> ref_conv(const std::vector<float>& x, Shape xs, const std::vector<float>& w, int k,
                            const std::vector<float>& b, int co_n, Stride3 s) {
  const Shape os{co_n, xs.d / s[0], xs.h / s[1], xs.w / s[2]};
  const int pad = k == 3 ? 1 : 0;
  std::vector<float> out(os.numel());
  for (int co = 0; co < co_n; ++co)
    for (int z = 0; z < os.d; ++z)
      for (int y = 0; y < os.h; ++y)
        for (int xx = 0; xx < os.w; ++xx) {
          double acc = b[co];
          for (int ci = 0; ci < xs.c; ++ci)
            for (int kz = 0; kz < k; ++kz)
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                  const int iz = z * s[0] + kz - pad, iy = y * s[1] + ky - pad, ix = xx * s[2] + kx - pad;
                  if (iz < 0 || iy < 0 || ix < 0 || iz >= xs.d || iy >= xs.h || ix >= xs.w) continue;
                  acc += static_cast<double>(w[((co * xs.c + ci) * k + kz) * k * k + ky * k + kx]) *
                         x[((static_cast<std::size_t>(ci) * xs.d + iz) * xs.h + iy) * xs.w + ix];
                }
          out[((static_cast<std::size_t>(co) * os.d + z) * os.h + y) * os.w + xx] = static_cast<float>(acc);
        }
  return out;
}

}  // namespace

TEST_CASE("conv3d forward matches loop reference") {
  std::mt19937_64 rng(1);
  for (Stride3 s : {Stride3{1, 1, 1}, Stride3{2, 2, 2}, Stride3{1, 2, 2}, Stride3{2, 1, 2}})
    for (int k : {3, 1}) {
      const Shape xs{2, 4, 6, 8};
      const auto x = randv(xs.numel(), rng), w = randv(static_cast<std::size_t>(3 * 2 * k * k * k), rng),
                 b = randv(3, rng);
      const auto y = conv3d(constant(xs, x), constant({3, 2, k * k * k, 1}, w), constant(Shape::vec(3), b), s);
      const auto ref = ref_conv(x, xs, w, k, b, 3, s);
      REQUIRE(y->value.size() == ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y->value[i] == doctest::Approx(ref[i]).epsilon(1e-4));
    }
}

TEST_CASE("conv3d rejects indivisible shapes") {
  const Shape xs{1, 3, 4, 4};
  auto x = constant(xs, std::vector<float>(xs.numel(), 0.0f));
  auto w = constant({1, 1, 27, 1}, std::vector<float>(27, 0.0f));
  CHECK_THROWS_AS(conv3d(x, w, nullptr, {2, 2, 2}), Error);
  auto w2 = constant({1, 2, 27, 1}, std::vector<float>(54, 0.0f));
  CHECK_THROWS_AS(conv3d(x, w2, nullptr), Error);
}

TEST_CASE("gradients match finite differences") {
  std::mt19937_64 rng(2);
  const Shape xs{2, 2, 4, 4};
  auto x = parameter(xs, randv(xs.numel(), rng), "x");

  SUBCASE("conv3d k3 stride 1 and 2") {
    for (Stride3 s : {Stride3{1, 1, 1}, Stride3{2, 2, 2}, Stride3{1, 2, 2}}) {
      auto w = parameter({3, 2, 27, 1}, randv(162, rng, 0.3f), "w");
      auto b = parameter(Shape::vec(3), randv(3, rng), "b");
      grad_check([s](const std::vector<Var>& v) { return conv3d(v[0], v[1], v[2], s); }, {x, w, b}, rng);
    }
  }
  SUBCASE("conv3d k1 strided") {
    auto w = parameter({3, 2, 1, 1}, randv(6, rng), "w");
    auto b = parameter(Shape::vec(3), randv(3, rng), "b");
    grad_check([](const std::vector<Var>& v) { return conv3d(v[0], v[1], v[2], {2, 2, 2}); }, {x, w, b}, rng);
    grad_check([](const std::vector<Var>& v) { return conv3d(v[0], v[1], nullptr); }, {x, w}, rng);
  }
  SUBCASE("instance norm") {
    auto g = parameter(Shape::vec(2), {1.3f, 0.7f}, "gamma");
    auto b = parameter(Shape::vec(2), {0.1f, -0.2f}, "beta");
    grad_check([](const std::vector<Var>& v) { return instance_norm(v[0], v[1], v[2]); }, {x, g, b}, rng, 3e-2);
  }
  SUBCASE("pointwise") {
    grad_check([](const std::vector<Var>& v) { return sigmoid(v[0]); }, {x}, rng);
    grad_check([](const std::vector<Var>& v) { return leaky_relu(v[0], 0.01f); }, {x}, rng, 5e-2);
    auto y = parameter(xs, randv(xs.numel(), rng), "y");
    grad_check([](const std::vector<Var>& v) { return add(v[0], v[1]); }, {x, y}, rng);
    grad_check([](const std::vector<Var>& v) { return concat_channels(v[0], v[1]); }, {x, y}, rng);
  }
  SUBCASE("pooling, upsampling, linear heads") {
    grad_check([](const std::vector<Var>& v) { return upsample_nearest(v[0], {1, 2, 2}); }, {x}, rng);
    grad_check([](const std::vector<Var>& v) { return global_avg_pool(v[0]); }, {x}, rng);
    auto w = parameter({3, 2, 1, 1}, randv(6, rng), "w");
    auto b = parameter(Shape::vec(3), randv(3, rng), "b");
    grad_check([](const std::vector<Var>& v) { return linear(global_avg_pool(v[0]), v[1], v[2]); }, {x, w, b}, rng);
    auto k = parameter(Shape::vec(3), randv(3, rng), "k");
    auto kb = parameter(Shape::vec(1), {0.2f}, "kb");
    grad_check([](const std::vector<Var>& v) { return channel_conv1d(global_avg_pool(v[0]), v[1], v[2]); },
               {x, k, kb}, rng);
    auto s = parameter(Shape::vec(2), {0.4f, -1.2f}, "s");
    grad_check([](const std::vector<Var>& v) { return scale_channels(v[0], v[1]); }, {x, s}, rng);
  }
  SUBCASE("softmax cross entropy") {
    std::vector<std::uint8_t> t(xs.plane());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = i % 2;
    grad_check([&t](const std::vector<Var>& v) { return softmax_cross_entropy(v[0], t); }, {x}, rng);
  }
}

TEST_CASE("dropout variants") {
  std::mt19937_64 rng(3);
  const Shape xs{64, 2, 2, 2};
  auto x = constant(xs, std::vector<float>(xs.numel(), 1.0f));
  Rng r(5);
  auto y = channel_dropout(x, 0.5f, r);
  int zeros = 0;
  for (int c = 0; c < xs.c; ++c) {
    const float v0 = y->value[c * 8];
    for (int i = 0; i < 8; ++i) CHECK(y->value[c * 8 + i] == v0);
    CHECK((v0 == 0.0f || v0 == 2.0f));
    zeros += v0 == 0.0f;
  }
  CHECK(zeros > 10);
  CHECK(zeros < 54);
  CHECK(channel_dropout(x, 0.0f, r) == x);
  CHECK_THROWS_AS(dropout(x, 1.0f, r), Error);
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(4);
  const Shape s{4, 2, 3, 3};
  auto x = constant(s, randv(s.numel(), rng, 5.0f));
  const auto p = softmax_channels(*x);
  for (std::size_t v = 0; v < s.plane(); ++v) {
    double sum = 0;
    for (int k = 0; k < 4; ++k) sum += p[k * s.plane() + v];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("no-grad mode records nothing") {
  auto x = parameter(Shape::vec(3), {1, 2, 3}, "x");
  NoGradGuard g;
  auto y = sigmoid(x);
  CHECK_FALSE(y->requires_grad);
  CHECK(y->inputs.empty());
}

TEST_CASE("adam minimises a quadratic; store round trip") {
  Rng rng(1);
  ParamStore store;
  auto p = store.he_normal("p", Shape::vec(4), 4, rng);
  Adam opt(store.params(), {.lr = 0.05});
  const std::vector<float> target{1, -2, 0.5f, 3};
  for (int it = 0; it < 2000; ++it) {
    store.zero_grad();
    float* g = p->grad_buffer();
    for (int i = 0; i < 4; ++i) g[i] = 2 * (p->value[i] - target[i]);
    opt.step();
  }
  for (int i = 0; i < 4; ++i) CHECK(p->value[i] == doctest::Approx(target[i]).epsilon(1e-2));

  const auto path = std::filesystem::temp_directory_path() / "segqc_nn_weights.bin";
  store.save(path);
  ParamStore other;
  other.filled("p", Shape::vec(4), 0.0f);
  other.load(path);
  CHECK(other.params()[0]->value == p->value);
  ParamStore wrong;
  wrong.filled("q", Shape::vec(4), 0.0f);
  CHECK_THROWS_AS(wrong.load(path), Error);
}
