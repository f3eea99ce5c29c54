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
#include <cstddef>

namespace oracle {

// Closed-form tally for the residual encoder: stem conv + norm, then per
// block two 3x3x3 convs with norms, plus a 1x1x1 projection with norm on
// every stage's first block when it changes shape.
inline std::size_t encoder_params_formula(int in_ch, int b, std::array<int, 4> blocks, bool first_projects) {
  std::size_t n = 27ull * in_ch * b + 2ull * b;
  int cin = b;
  for (int s = 0; s < 4; ++s) {
    const std::size_t w = static_cast<std::size_t>(b) << s;
    for (int k = 0; k < blocks[s]; ++k) {
      n += 27 * cin * w + 2 * w + 27 * w * w + 2 * w;
      if (k == 0 && (first_projects || cin != static_cast<int>(w))) n += cin * w + 2 * w;
      cin = static_cast<int>(w);
    }
  }
  return n;
}

}  // namespace oracle
