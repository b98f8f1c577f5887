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

#include "tta/core/math.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tta/core/error.hpp"

namespace tta {

double entropy(std::span<const double> p) {
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0 || !std::isfinite(v)) throw Error(ErrorCode::kNotNormalized, "negative or non-finite probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) throw Error(ErrorCode::kNotNormalized, "probabilities do not sum to 1");
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(std::max(v, kProbFloor));
  }
  return std::max(h, 0.0);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::ranges::max_element(logits);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / temperature);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::ranges::max_element(logits);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  const double lse = top + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

Tensor softmax_rows(const Tensor& logits, double temperature) {
  Tensor out(logits.batch(), logits.shape());
  for (std::size_t n = 0; n < logits.batch(); ++n) {
    auto p = softmax(logits.row(n), temperature);
    std::ranges::copy(p, out.row(n).begin());
  }
  return out;
}

std::vector<std::size_t> argmax_rows(const Tensor& scores) {
  std::vector<std::size_t> out(scores.batch());
  for (std::size_t n = 0; n < scores.batch(); ++n) out[n] = argmax(scores.row(n));
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace tta
