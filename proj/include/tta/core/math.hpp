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
#include <cstdint>
#include <span>
#include <vector>

#include "tta/core/tensor.hpp"

namespace tta {

// Probability floor applied before taking logs of probabilities.
inline constexpr double kProbFloor = 1e-12;

// Shannon entropy of a probability vector, natural log.
// Throws NotNormalized if entries are negative or do not sum to 1 within 1e-6.
double entropy(std::span<const double> p);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
std::vector<double> log_softmax(std::span<const double> logits);

// Row-wise softmax over a [batch x C] tensor.
Tensor softmax_rows(const Tensor& logits, double temperature = 1.0);
std::vector<std::size_t> argmax_rows(const Tensor& scores);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// Deterministic 64-bit mixing used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace tta
