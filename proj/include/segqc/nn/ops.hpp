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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "segqc/nn/tensor.hpp"
#include "segqc/util/rng.hpp"

namespace segqc::nn {

using Stride3 = std::array<int, 3>;

/// 3D cross-correlation. `weight` has shape (out, in, k^3, 1) with k in
/// {1, 3}; k = 3 uses zero padding 1. Strides must be 1 or 2 and divide
/// the input extent. `bias` may be null.
Var conv3d(const Var& x, const Var& weight, const Var& bias, Stride3 stride = {1, 1, 1});

/// Per-channel normalisation over the spatial axes with affine gamma/beta.
Var instance_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);

Var leaky_relu(const Var& x, float slope);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);

/// Zeroes whole channels with probability p and rescales by 1/(1-p).
Var channel_dropout(const Var& x, float p, Rng& rng);
/// Zeroes individual elements with probability p and rescales by 1/(1-p).
Var dropout(const Var& x, float p, Rng& rng);

/// Nearest-neighbour upsampling by an integer factor per spatial axis.
Var upsample_nearest(const Var& x, Stride3 factor);
/// Concatenation along the channel axis.
Var concat_channels(const Var& a, const Var& b);
/// (C, D, H, W) -> (C, 1, 1, 1) spatial mean.
Var global_avg_pool(const Var& x);
/// y = W x + b with x of shape (n) and W of shape (out, n).
Var linear(const Var& x, const Var& weight, const Var& bias);
/// Zero-padded correlation along the channel axis of a (C) vector with an
/// odd-length kernel `weight` (k) and scalar `bias` (1).
Var channel_conv1d(const Var& v, const Var& weight, const Var& bias);
/// Multiplies channel c of x by s[c].
Var scale_channels(const Var& x, const Var& s);

/// Mean voxel-wise cross-entropy of softmax(logits) against class indices.
Var softmax_cross_entropy(const Var& logits, std::span<const std::uint8_t> target);

/// Channel softmax of raw values (no graph).
std::vector<float> softmax_channels(const Node& logits);

}  // namespace segqc::nn
