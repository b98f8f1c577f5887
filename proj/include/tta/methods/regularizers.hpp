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
#include <vector>

#include "tta/core/model.hpp"
#include "tta/core/model_state.hpp"

namespace tta::methods {

using ParameterMap = std::map<std::string, std::vector<double>>;

// omega_i = mean over calibration rows of (dH(p_n)/d theta_i)^2, using
// per-sample gradients under running normalization statistics.
ParameterMap fisher_weights(AdaptiveModel& model, const Tensor& calibration, const std::vector<std::string>& names);

struct Penalty {
  double value = 0.0;
  GradientSet gradient;
};

// lambda * sum_i omega_i (theta_i - anchor_i)^2 and its gradient. Every key of
// `omega` must be present in both maps with matching sizes (ShapeMismatch otherwise).
Penalty fisher_penalty(const ParameterMap& theta, const ParameterMap& anchor, const ParameterMap& omega, double lambda);

// Resets each element of the named parameters to its value in `source` with
// probability p. Returns the number of elements reset.
std::size_t stochastic_restore(AdaptiveModel& model, const ModelState& source, double p, std::mt19937_64& rng,
                               const std::vector<std::string>& names);

}  // namespace tta::methods
