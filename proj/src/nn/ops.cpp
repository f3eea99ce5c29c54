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

#include "segqc/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "segqc/simd/kernels.hpp"
#include "segqc/util/error.hpp"

namespace segqc::nn {

namespace {

// Zero-padded (pad 1) copy of a (C, D, H, W) tensor, split into `phases`
// interleaved x-phases so that stride-2 taps read contiguous rows.
struct PaddedInput {
  int channels = 0;
  int phases = 1;
  int row = 0;    // floats per padded row (per phase)
  int rows = 0;   // padded H
  int planes = 0; // padded D
  std::size_t phase_size = 0;
  std::size_t chan_size = 0;
  std::vector<float> data;

  PaddedInput(const Shape& s, int stride_w) {
    channels = s.c;
    phases = stride_w;
    const int wp = s.w + 2;
    row = (wp + phases - 1) / phases;
    rows = s.h + 2;
    planes = s.d + 2;
    phase_size = static_cast<std::size_t>(row) * rows * planes;
    chan_size = phase_size * phases;
    data.assign(chan_size * channels, 0.0f);
  }

  [[nodiscard]] std::size_t offset(int c, int z, int y, int xx) const {
    return c * chan_size + (xx % phases) * phase_size + (static_cast<std::size_t>(z) * rows + y) * row +
           xx / phases;
  }

  void pack(const Shape& s, const float* src) {
    for (int c = 0; c < s.c; ++c)
      for (int z = 0; z < s.d; ++z)
        for (int y = 0; y < s.h; ++y) {
          const float* in = src + ((static_cast<std::size_t>(c) * s.d + z) * s.h + y) * s.w;
          if (phases == 1) {
            std::copy(in, in + s.w, data.data() + offset(c, z + 1, y + 1, 1));
          } else {
            for (int x = 0; x < s.w; ++x) data[offset(c, z + 1, y + 1, x + 1)] = in[x];
          }
        }
  }

  // Tap pointers for output (zo, yo) reading channel c.
  void taps(const float* base, int c, int z0, int y0, const float* out[3]) const {
    for (int kx = 0; kx < 3; ++kx) out[kx] = base + offset(c, z0, y0, kx);
  }
};

Shape conv_output_shape(const Shape& in, int out_channels, Stride3 s) {
  for (int a = 0; a < 3; ++a) {
    const int ext = a == 0 ? in.d : (a == 1 ? in.h : in.w);
    if (s[a] != 1 && s[a] != 2) fail_config("convolution stride must be 1 or 2");
    if (ext % s[a] != 0)
      fail_config("spatial extent " + std::to_string(ext) + " is not divisible by stride " + std::to_string(s[a]));
  }
  return {out_channels, in.d / s[0], in.h / s[1], in.w / s[2]};
}

// out (co_n, os) += w * in, with z/y strides applied through the base row
// and the x stride through the phase split of `in`.
void conv_accumulate(const PaddedInput& in, const float* w, int co_n, int ci_n, const Shape& os, Stride3 stride,
                     float* out) {
  const auto& K = simd::active();
  const std::ptrdiff_t row = in.row;
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(in.row) * in.rows;
  const std::size_t wo = static_cast<std::size_t>(os.w);
  const std::size_t out_plane = os.plane();
  for (int co = 0; co < co_n; ++co) {
    float* oc = out + co * out_plane;
    for (int ci = 0; ci < ci_n; ++ci) {
      const float* w27 = w + (static_cast<std::size_t>(co) * ci_n + ci) * 27;
      for (int z = 0; z < os.d; ++z)
        for (int y = 0; y < os.h; ++y) {
          const float* taps[3];
          in.taps(in.data.data(), ci, z * stride[0], y * stride[1], taps);
          K.conv3_row(oc + (static_cast<std::size_t>(z) * os.h + y) * wo, wo, taps, row, plane, w27);
        }
    }
  }
}

Var conv3x3x3(const Var& x, const Var& weight, const Var& bias, Stride3 stride) {
  const Shape in = x->shape;
  const int co_n = weight->shape.c, ci_n = weight->shape.d;
  const Shape out_shape = conv_output_shape(in, co_n, stride);
  auto padded = std::make_shared<PaddedInput>(in, stride[2]);
  padded->pack(in, x->value.data());
  std::vector<float> out(out_shape.numel(), 0.0f);
  if (bias)
    for (int co = 0; co < co_n; ++co)
      std::fill(out.begin() + co * out_shape.plane(), out.begin() + (co + 1) * out_shape.plane(), bias->value[co]);
  conv_accumulate(*padded, weight->value.data(), co_n, ci_n, out_shape, stride, out.data());
  return make_node(out_shape, std::move(out), {x, weight, bias}, [padded, stride, in](Node& self) {
    const auto& K = simd::active();
    const Var& x = self.inputs[0];
    const Var& weight = self.inputs[1];
    const Var& bias = self.inputs[2];
    const Shape os = self.shape;
    const int co_n = weight->shape.c, ci_n = weight->shape.d;
    const std::size_t out_plane = os.plane();
    const float* g = self.grad.data();
    if (bias && bias->requires_grad) {
      float* db = bias->grad_buffer();
      for (int co = 0; co < co_n; ++co) {
        double s = 0.0;
        for (std::size_t i = 0; i < out_plane; ++i) s += g[co * out_plane + i];
        db[co] += static_cast<float>(s);
      }
    }
    if (weight->requires_grad) {
      float* dw = weight->grad_buffer();
      const std::ptrdiff_t row = padded->row;
      const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(padded->row) * padded->rows;
      const std::size_t wo = static_cast<std::size_t>(os.w), ho = static_cast<std::size_t>(os.h);
      for (int co = 0; co < co_n; ++co)
        for (int ci = 0; ci < ci_n; ++ci) {
          float* dw27 = dw + (static_cast<std::size_t>(co) * ci_n + ci) * 27;
          for (int z = 0; z < os.d; ++z) {
            const float* taps[3];
            padded->taps(static_cast<const float*>(padded->data.data()), ci, z * stride[0], 0, taps);
            K.conv3_plane_wgrad(g + co * out_plane + z * ho * wo, wo, ho, taps, stride[1] * row, row, plane, dw27);
          }
        }
    }
    if (x->requires_grad) {
      // Transposed convolution: stride-1 correlation of the zero-dilated,
      // padded output gradient with the flipped, transposed kernel.
      const Shape gs{co_n, in.d, in.h, in.w};
      PaddedInput gp(gs, 1);
      for (int co = 0; co < co_n; ++co)
        for (int z = 0; z < os.d; ++z)
          for (int y = 0; y < os.h; ++y) {
            const float* src = g + co * out_plane + (static_cast<std::size_t>(z) * os.h + y) * os.w;
            float* dst = gp.data.data() + gp.offset(co, z * stride[0] + 1, y * stride[1] + 1, 1);
            if (stride[2] == 1) {
              std::copy(src, src + os.w, dst);
            } else {
              for (int xx = 0; xx < os.w; ++xx) dst[xx * stride[2]] = src[xx];
            }
          }
      std::vector<float> wt(weight->value.size());
      for (int co = 0; co < co_n; ++co)
        for (int ci = 0; ci < ci_n; ++ci)
          for (int k = 0; k < 27; ++k)
            wt[(static_cast<std::size_t>(ci) * co_n + co) * 27 + k] =
                weight->value[(static_cast<std::size_t>(co) * ci_n + ci) * 27 + 26 - k];
      conv_accumulate(gp, wt.data(), ci_n, co_n, in, {1, 1, 1}, x->grad_buffer());
    }
  });
}

std::vector<float> subsample(const Shape& in, const float* src, const Shape& os, Stride3 s) {
  std::vector<float> out(os.numel());
  for (int c = 0; c < os.c; ++c)
    for (int z = 0; z < os.d; ++z)
      for (int y = 0; y < os.h; ++y)
        for (int x = 0; x < os.w; ++x)
          out[((static_cast<std::size_t>(c) * os.d + z) * os.h + y) * os.w + x] =
              src[((static_cast<std::size_t>(c) * in.d + z * s[0]) * in.h + y * s[1]) * in.w + x * s[2]];
  return out;
}

Var conv1x1x1(const Var& x, const Var& weight, const Var& bias, Stride3 stride) {
  const Shape in = x->shape;
  const int co_n = weight->shape.c, ci_n = weight->shape.d;
  const Shape sub{ci_n, in.d / stride[0], in.h / stride[1], in.w / stride[2]};
  const Shape out_shape = conv_output_shape(in, co_n, stride);
  const bool strided = stride != Stride3{1, 1, 1};
  auto xs = std::make_shared<std::vector<float>>(strided ? subsample(in, x->value.data(), sub, stride)
                                                         : std::vector<float>());
  const float* src = strided ? xs->data() : x->value.data();
  const auto& K = simd::active();
  const std::size_t V = out_shape.plane();
  std::vector<float> out(out_shape.numel(), 0.0f);
  for (int co = 0; co < co_n; ++co) {
    float* oc = out.data() + co * V;
    if (bias) std::fill(oc, oc + V, bias->value[co]);
    for (int ci = 0; ci < ci_n; ++ci) K.axpy(weight->value[co * ci_n + ci], src + ci * V, oc, V);
  }
  return make_node(out_shape, std::move(out), {x, weight, bias}, [xs, strided, stride, in, sub](Node& self) {
    const auto& K = simd::active();
    const Var& x = self.inputs[0];
    const Var& weight = self.inputs[1];
    const Var& bias = self.inputs[2];
    const int co_n = weight->shape.c, ci_n = weight->shape.d;
    const std::size_t V = self.shape.plane();
    const float* g = self.grad.data();
    const float* src = strided ? xs->data() : x->value.data();
    if (bias && bias->requires_grad) {
      float* db = bias->grad_buffer();
      for (int co = 0; co < co_n; ++co) {
        double s = 0.0;
        for (std::size_t i = 0; i < V; ++i) s += g[co * V + i];
        db[co] += static_cast<float>(s);
      }
    }
    if (weight->requires_grad) {
      float* dw = weight->grad_buffer();
      for (int co = 0; co < co_n; ++co)
        for (int ci = 0; ci < ci_n; ++ci) dw[co * ci_n + ci] += static_cast<float>(K.dot(g + co * V, src + ci * V, V));
    }
    if (x->requires_grad) {
      std::vector<float> dsub(strided ? sub.numel() : 0, 0.0f);
      float* dst = strided ? dsub.data() : x->grad_buffer();
      for (int ci = 0; ci < ci_n; ++ci)
        for (int co = 0; co < co_n; ++co) K.axpy(weight->value[co * ci_n + ci], g + co * V, dst + ci * V, V);
      if (strided) {
        float* dx = x->grad_buffer();
        for (int c = 0; c < sub.c; ++c)
          for (int z = 0; z < sub.d; ++z)
            for (int y = 0; y < sub.h; ++y)
              for (int xx = 0; xx < sub.w; ++xx)
                dx[((static_cast<std::size_t>(c) * in.d + z * stride[0]) * in.h + y * stride[1]) * in.w + xx * stride[2]] +=
                    dsub[((static_cast<std::size_t>(c) * sub.d + z) * sub.h + y) * sub.w + xx];
      }
    }
  });
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!(a->shape == b->shape))
    fail_data(std::string(op) + ": shape mismatch " + to_string(a->shape) + " vs " + to_string(b->shape));
}

}  // namespace

Var conv3d(const Var& x, const Var& weight, const Var& bias, Stride3 stride) {
  if (weight->shape.d != x->shape.c)
    fail_config("conv3d: weight expects " + std::to_string(weight->shape.d) + " input channels, got " +
                std::to_string(x->shape.c));
  if (bias && bias->shape.numel() != static_cast<std::size_t>(weight->shape.c))
    fail_config("conv3d: bias size does not match output channels");
  if (weight->shape.h == 27) return conv3x3x3(x, weight, bias, stride);
  if (weight->shape.h == 1) return conv1x1x1(x, weight, bias, stride);
  fail_config("conv3d supports kernel sizes 1 and 3 only");
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
  const Shape s = x->shape;
  const std::size_t V = s.plane();
  const auto& K = simd::active();
  auto xhat = std::make_shared<std::vector<float>>(s.numel());
  auto inv_std = std::make_shared<std::vector<float>>(s.c);
  std::vector<float> out(s.numel());
  for (int c = 0; c < s.c; ++c) {
    const float* xc = x->value.data() + c * V;
    double sum, sumsq;
    K.sum_sumsq(xc, V, &sum, &sumsq);
    const double mean = sum / static_cast<double>(V);
    const double var = std::max(0.0, sumsq / static_cast<double>(V) - mean * mean);
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps));
    (*inv_std)[c] = inv;
    K.affine(xc, inv, static_cast<float>(-mean) * inv, xhat->data() + c * V, V);
    K.affine(xhat->data() + c * V, gamma->value[c], beta->value[c], out.data() + c * V, V);
  }
  return make_node(s, std::move(out), {x, gamma, beta}, [xhat, inv_std](Node& self) {
    const auto& K = simd::active();
    const Var& x = self.inputs[0];
    const Var& gamma = self.inputs[1];
    const Var& beta = self.inputs[2];
    const std::size_t V = self.shape.plane();
    const double inv_v = 1.0 / static_cast<double>(V);
    for (int c = 0; c < self.shape.c; ++c) {
      const float* g = self.grad.data() + c * V;
      const float* xh = xhat->data() + c * V;
      double sg = 0.0, sgx = 0.0;
      for (std::size_t i = 0; i < V; ++i) sg += g[i];
      sgx = K.dot(g, xh, V);
      if (gamma->requires_grad) gamma->grad_buffer()[c] += static_cast<float>(sgx);
      if (beta->requires_grad) beta->grad_buffer()[c] += static_cast<float>(sg);
      if (x->requires_grad) {
        const float k = gamma->value[c] * (*inv_std)[c];
        K.axpbypc(k, g, static_cast<float>(-k * sgx * inv_v), xh, static_cast<float>(-k * sg * inv_v),
                  x->grad_buffer() + c * V, V);
      }
    }
  });
}

Var leaky_relu(const Var& x, float slope) {
  std::vector<float> out(x->value.size());
  simd::active().leaky_relu(x->value.data(), slope, out.data(), out.size());
  return make_node(x->shape, std::move(out), {x}, [slope](Node& self) {
    const Var& x = self.inputs[0];
    simd::active().leaky_relu_grad(x->value.data(), self.grad.data(), slope, x->grad_buffer(), x->value.size());
  });
}

Var sigmoid(const Var& x) {
  std::vector<float> out(x->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = x->value[i];
    out[i] = v >= 0.0f ? 1.0f / (1.0f + std::exp(-v)) : std::exp(v) / (1.0f + std::exp(v));
  }
  return make_node(x->shape, std::move(out), {x}, [](Node& self) {
    float* dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const float y = self.value[i];
      dx[i] += self.grad[i] * y * (1.0f - y);
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  std::vector<float> out(a->value);
  simd::active().axpy(1.0f, b->value.data(), out.data(), out.size());
  return make_node(a->shape, std::move(out), {a, b}, [](Node& self) {
    const auto& K = simd::active();
    for (int i = 0; i < 2; ++i)
      if (self.inputs[i]->requires_grad)
        K.axpy(1.0f, self.grad.data(), self.inputs[i]->grad_buffer(), self.grad.size());
  });
}

namespace {

Var masked_scale(const Var& x, std::shared_ptr<std::vector<float>> mask, std::size_t block) {
  std::vector<float> out(x->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->value[i] * (*mask)[i / block];
  return make_node(x->shape, std::move(out), {x}, [mask, block](Node& self) {
    float* dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i] * (*mask)[i / block];
  });
}

}  // namespace

Var channel_dropout(const Var& x, float p, Rng& rng) {
  if (p <= 0.0f) return x;
  if (p >= 1.0f) fail_config("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  auto mask = std::make_shared<std::vector<float>>(x->shape.c);
  for (auto& m : *mask) m = keep(rng) ? 1.0f / (1.0f - p) : 0.0f;
  return masked_scale(x, mask, x->shape.plane());
}

Var dropout(const Var& x, float p, Rng& rng) {
  if (p <= 0.0f) return x;
  if (p >= 1.0f) fail_config("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  auto mask = std::make_shared<std::vector<float>>(x->value.size());
  for (auto& m : *mask) m = keep(rng) ? 1.0f / (1.0f - p) : 0.0f;
  return masked_scale(x, mask, 1);
}

Var upsample_nearest(const Var& x, Stride3 f) {
  const Shape in = x->shape;
  const Shape os{in.c, in.d * f[0], in.h * f[1], in.w * f[2]};
  std::vector<float> out(os.numel());
  for (int c = 0; c < os.c; ++c)
    for (int z = 0; z < os.d; ++z)
      for (int y = 0; y < os.h; ++y) {
        const float* src = x->value.data() + ((static_cast<std::size_t>(c) * in.d + z / f[0]) * in.h + y / f[1]) * in.w;
        float* dst = out.data() + ((static_cast<std::size_t>(c) * os.d + z) * os.h + y) * os.w;
        for (int xx = 0; xx < os.w; ++xx) dst[xx] = src[xx / f[2]];
      }
  return make_node(os, std::move(out), {x}, [f, in](Node& self) {
    const Shape os = self.shape;
    float* dx = self.inputs[0]->grad_buffer();
    for (int c = 0; c < os.c; ++c)
      for (int z = 0; z < os.d; ++z)
        for (int y = 0; y < os.h; ++y) {
          float* dst = dx + ((static_cast<std::size_t>(c) * in.d + z / f[0]) * in.h + y / f[1]) * in.w;
          const float* g = self.grad.data() + ((static_cast<std::size_t>(c) * os.d + z) * os.h + y) * os.w;
          for (int xx = 0; xx < os.w; ++xx) dst[xx / f[2]] += g[xx];
        }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  if (!(a->shape.grid() == b->shape.grid()))
    fail_data("concat_channels: spatial mismatch " + to_string(a->shape) + " vs " + to_string(b->shape));
  Shape os = a->shape;
  os.c += b->shape.c;
  std::vector<float> out(a->value);
  out.insert(out.end(), b->value.begin(), b->value.end());
  return make_node(os, std::move(out), {a, b}, [](Node& self) {
    const std::size_t na = self.inputs[0]->value.size();
    if (self.inputs[0]->requires_grad) {
      float* da = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < na; ++i) da[i] += self.grad[i];
    }
    if (self.inputs[1]->requires_grad) {
      float* db = self.inputs[1]->grad_buffer();
      for (std::size_t i = na; i < self.grad.size(); ++i) db[i - na] += self.grad[i];
    }
  });
}

Var global_avg_pool(const Var& x) {
  const std::size_t V = x->shape.plane();
  std::vector<float> out(x->shape.c);
  for (int c = 0; c < x->shape.c; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < V; ++i) s += x->value[c * V + i];
    out[c] = static_cast<float>(s / static_cast<double>(V));
  }
  return make_node(Shape::vec(x->shape.c), std::move(out), {x}, [V](Node& self) {
    float* dx = self.inputs[0]->grad_buffer();
    const float inv = 1.0f / static_cast<float>(V);
    for (int c = 0; c < self.shape.c; ++c) {
      const float g = self.grad[c] * inv;
      for (std::size_t i = 0; i < V; ++i) dx[c * V + i] += g;
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const int n = static_cast<int>(x->value.size());
  const int o = weight->shape.c;
  if (weight->shape.d != n) fail_config("linear: weight expects " + std::to_string(weight->shape.d) + " inputs");
  std::vector<float> out(o);
  for (int i = 0; i < o; ++i) {
    double s = bias ? bias->value[i] : 0.0;
    for (int j = 0; j < n; ++j) s += static_cast<double>(weight->value[i * n + j]) * x->value[j];
    out[i] = static_cast<float>(s);
  }
  return make_node(Shape::vec(o), std::move(out), {x, weight, bias}, [n, o](Node& self) {
    const Var& x = self.inputs[0];
    const Var& weight = self.inputs[1];
    const Var& bias = self.inputs[2];
    if (bias && bias->requires_grad)
      for (int i = 0; i < o; ++i) bias->grad_buffer()[i] += self.grad[i];
    if (weight->requires_grad) {
      float* dw = weight->grad_buffer();
      for (int i = 0; i < o; ++i)
        for (int j = 0; j < n; ++j) dw[i * n + j] += self.grad[i] * x->value[j];
    }
    if (x->requires_grad) {
      float* dx = x->grad_buffer();
      for (int i = 0; i < o; ++i)
        for (int j = 0; j < n; ++j) dx[j] += self.grad[i] * weight->value[i * n + j];
    }
  });
}

Var channel_conv1d(const Var& v, const Var& weight, const Var& bias) {
  const int n = static_cast<int>(v->value.size());
  const int k = static_cast<int>(weight->value.size());
  if (k % 2 == 0) fail_config("channel_conv1d kernel size must be odd");
  const int half = k / 2;
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) {
    double s = bias ? bias->value[0] : 0.0;
    for (int j = 0; j < k; ++j) {
      const int src = i + j - half;
      if (src >= 0 && src < n) s += static_cast<double>(weight->value[j]) * v->value[src];
    }
    out[i] = static_cast<float>(s);
  }
  return make_node(v->shape, std::move(out), {v, weight, bias}, [n, k, half](Node& self) {
    const Var& v = self.inputs[0];
    const Var& weight = self.inputs[1];
    const Var& bias = self.inputs[2];
    for (int i = 0; i < n; ++i) {
      const float g = self.grad[i];
      if (bias && bias->requires_grad) bias->grad_buffer()[0] += g;
      for (int j = 0; j < k; ++j) {
        const int src = i + j - half;
        if (src < 0 || src >= n) continue;
        if (weight->requires_grad) weight->grad_buffer()[j] += g * v->value[src];
        if (v->requires_grad) v->grad_buffer()[src] += g * weight->value[j];
      }
    }
  });
}

Var scale_channels(const Var& x, const Var& s) {
  if (s->value.size() != static_cast<std::size_t>(x->shape.c)) fail_data("scale_channels: one scale per channel required");
  const std::size_t V = x->shape.plane();
  std::vector<float> out(x->value.size());
  const auto& K = simd::active();
  for (int c = 0; c < x->shape.c; ++c) K.affine(x->value.data() + c * V, s->value[c], 0.0f, out.data() + c * V, V);
  return make_node(x->shape, std::move(out), {x, s}, [V](Node& self) {
    const auto& K = simd::active();
    const Var& x = self.inputs[0];
    const Var& s = self.inputs[1];
    for (int c = 0; c < self.shape.c; ++c) {
      const float* g = self.grad.data() + c * V;
      if (s->requires_grad) s->grad_buffer()[c] += static_cast<float>(K.dot(g, x->value.data() + c * V, V));
      if (x->requires_grad) K.axpy(s->value[c], g, x->grad_buffer() + c * V, V);
    }
  });
}

std::vector<float> softmax_channels(const Node& logits) {
  const int K = logits.shape.c;
  const std::size_t V = logits.shape.plane();
  std::vector<float> out(logits.value.size());
  for (std::size_t v = 0; v < V; ++v) {
    float m = logits.value[v];
    for (int k = 1; k < K; ++k) m = std::max(m, logits.value[k * V + v]);
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      const float e = std::exp(logits.value[k * V + v] - m);
      out[k * V + v] = e;
      s += e;
    }
    for (int k = 0; k < K; ++k) out[k * V + v] = static_cast<float>(out[k * V + v] / s);
  }
  return out;
}

Var softmax_cross_entropy(const Var& logits, std::span<const std::uint8_t> target) {
  const int K = logits->shape.c;
  const std::size_t V = logits->shape.plane();
  if (target.size() != V) fail_data("softmax_cross_entropy: target size mismatch");
  auto prob = std::make_shared<std::vector<float>>(softmax_channels(*logits));
  double loss = 0.0;
  for (std::size_t v = 0; v < V; ++v) {
    if (target[v] >= K) fail_data("softmax_cross_entropy: target class out of range");
    loss -= std::log(std::max((*prob)[target[v] * V + v], 1e-12f));
  }
  std::vector<std::uint8_t> tgt(target.begin(), target.end());
  return make_node(Shape::vec(1), {static_cast<float>(loss / static_cast<double>(V))}, {logits},
                   [prob, tgt = std::move(tgt), K, V](Node& self) {
                     float* dx = self.inputs[0]->grad_buffer();
                     const float g = self.grad[0] / static_cast<float>(V);
                     for (int k = 0; k < K; ++k)
                       for (std::size_t v = 0; v < V; ++v)
                         dx[k * V + v] += g * ((*prob)[k * V + v] - (tgt[v] == k ? 1.0f : 0.0f));
                   });
}

}  // namespace segqc::nn
