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

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tta/core/tensor.hpp"

namespace tta::streams {

enum class Corruption { kGaussianNoise, kBlur, kContrast, kPixelate };

inline constexpr int kMaxSeverity = 5;

Corruption parse_corruption(std::string_view name);  // throws UnknownCorruption
std::string_view to_string(Corruption kind);
std::vector<std::string> corruption_names();

// Applies a corruption per sample. Blur and pixelation act along the length
// axis of each channel; contrast shrinks each sample toward its own mean.
// Severity 0 is the identity; perturbation size is nondecreasing in severity.
Tensor apply_corruption(const Tensor& x, Corruption kind, int severity, std::mt19937_64& rng);
Tensor apply_corruption(const Tensor& x, std::string_view kind, int severity, std::mt19937_64& rng);

}  // namespace tta::streams
