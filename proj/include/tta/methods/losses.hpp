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
#include <span>
#include <vector>

#include "tta/core/tensor.hpp"

namespace tta::methods {

// Loss value plus its gradient with respect to the logits it was computed from.
struct LossGrad {
  double value = 0.0;
  Tensor dlogits;
};

// log p clamped below at log(kProbFloor); logits are rows of a [b x C] tensor.
Tensor clamped_log_probs(const Tensor& logits);

// dL/dz given g = dL/d(log p): dz_j = g_j - p_j * sum_c g_c, per row.
Tensor logits_grad(const Tensor& probs, const Tensor& g);

// Mean Shannon entropy over the selected rows (all rows when `mask` is empty).
// No selected rows: value 0 and a zero gradient.
LossGrad mean_entropy(const Tensor& logits, std::span<const char> mask = {});

// -(1/b) sum_i sum_c q_ic log p_ic with the targets q held constant.
LossGrad soft_cross_entropy(const Tensor& logits, const Tensor& targets);

// Cross-entropy against hard labels over the selected rows, divided by
// `normalizer` (0: number of selected rows).
LossGrad hard_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels, std::span<const char> mask = {},
                            double normalizer = 0.0);

// Mean per-row entropy minus the entropy of the mean prediction.
LossGrad information_maximization(const Tensor& logits);

// Entropy of the mean of the row-wise softmax distributions.
LossGrad marginal_entropy(const Tensor& logits);

// Per-row entropies of softmax(logits).
std::vector<double> row_entropies(const Tensor& logits);

}  // namespace tta::methods
