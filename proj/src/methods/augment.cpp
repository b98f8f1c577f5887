/**
 * Copyright 2026 The TTA Bench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tta/methods/augment.hpp"

#include <vector>

#include "tta/core/error.hpp"

namespace tta::methods {

Tensor Augmenter::operator()(const Tensor& x, std::size_t copies, std::mt19937_64& rng) const {
  if (config_.style_coordinate >= x.features()) throw Error(ErrorCode::kInvalidArgument, "style coordinate out of range");
  Tensor out(x.batch() * copies, x.shape());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution flip(config_.flip_probability);
  for (std::size_t n = 0; n < x.batch(); ++n) {
    const auto src = x.row(n);
    for (std::size_t k = 0; k < copies; ++k) {
      auto dst = out.row(n * copies + k);
      for (std::size_t f = 0; f < src.size(); ++f) {
        dst[f] = src[f];
        if (config_.jitter != 0.0) dst[f] += config_.jitter * normal(rng);
      }
      if (config_.flip_probability > 0.0 && flip(rng)) dst[config_.style_coordinate] = -dst[config_.style_coordinate];
    }
  }
  return out;
}

Tensor rotate(const Tensor& x, int quarter_turns) {
  const Shape s = x.shape();
  if (s.channels % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "rotation needs an even channel count");
  const int k = ((quarter_turns % 4) + 4) % 4;
  Tensor out = x;
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < s.channels; c += 2) {
      for (std::size_t l = 0; l < s.length; ++l) {
        double a = x(n, c, l);
        double b = x(n, c + 1, l);
        for (int t = 0; t < k; ++t) {
          const double na = -b;
          b = a;
          a = na;
        }
        out(n, c, l) = a;
        out(n, c + 1, l) = b;
      }
    }
  }
  return out;
}

Tensor rotation_batch(const Tensor& x) {
  std::vector<Tensor> parts;
  parts.reserve(kRotations);
  for (std::size_t k = 0; k < kRotations; ++k) parts.push_back(rotate(x, static_cast<int>(k)));
  return concat_rows(parts);
}

}  // namespace tta::methods
