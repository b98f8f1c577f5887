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

#pragma once

#include <cstddef>
#include <random>

#include "tta/core/tensor.hpp"

namespace tta::methods {

// Test-time augmentation for signal-shaped toy inputs: additive Gaussian
// jitter plus a random sign flip of one designated style coordinate.
struct AugmenterConfig {
  double jitter = 0.1;
  double flip_probability = 0.5;
  std::size_t style_coordinate = 0;
};

class Augmenter {
 public:
  explicit Augmenter(AugmenterConfig config = {}) : config_(config) {}
  const AugmenterConfig& config() const { return config_; }
  bool is_identity() const { return config_.jitter == 0.0 && config_.flip_probability == 0.0; }

  // `copies` augmented versions of every row, grouped by source row:
  // output row n * copies + k is copy k of input row n.
  Tensor operator()(const Tensor& x, std::size_t copies, std::mt19937_64& rng) const;

 private:
  AugmenterConfig config_;
};

// Rotation pretext transform: channel pairs (2j, 2j+1) are rotated by k * 90
// degrees pointwise, (a, b) -> (-b, a) per quarter turn. Needs an even channel count.
Tensor rotate(const Tensor& x, int quarter_turns);
inline constexpr std::size_t kRotations = 4;

// All four rotations stacked: rows [k * b, (k + 1) * b) hold rotation k.
Tensor rotation_batch(const Tensor& x);

}  // namespace tta::methods
