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

#include "tta/methods/regularizers.hpp"

#include "tta/core/error.hpp"
#include "tta/methods/losses.hpp"

namespace tta::methods {

ParameterMap fisher_weights(AdaptiveModel& model, const Tensor& calibration, const std::vector<std::string>& names) {
  ParameterMap omega;
  for (const auto& name : names) omega[name].assign(model.parameter(name).size(), 0.0);
  if (calibration.batch() == 0) return omega;
  const double scale = 1.0 / static_cast<double>(calibration.batch());
  for (std::size_t n = 0; n < calibration.batch(); ++n) {
    const Tensor x = calibration.rows(n, n + 1);
    model.zero_grad();
    const Tensor logits = model.forward(x).logits;
    model.backward(mean_entropy(logits).dlogits);
    for (const auto& name : names) {
      const auto g = model.gradient(name);
      auto& w = omega[name];
      for (std::size_t i = 0; i < g.size(); ++i) w[i] += scale * g[i] * g[i];
    }
  }
  model.zero_grad();
  return omega;
}

Penalty fisher_penalty(const ParameterMap& theta, const ParameterMap& anchor, const ParameterMap& omega, double lambda) {
  Penalty out;
  for (const auto& [name, w] : omega) {
    const auto t = theta.find(name);
    const auto a = anchor.find(name);
    if (t == theta.end() || a == anchor.end() || t->second.size() != w.size() || a->second.size() != w.size()) {
      throw Error(ErrorCode::kShapeMismatch, "fisher penalty operands for " + name);
    }
    auto& g = out.gradient[name];
    g.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = t->second[i] - a->second[i];
      out.value += lambda * w[i] * d * d;
      g[i] = 2.0 * lambda * w[i] * d;
    }
  }
  return out;
}

std::size_t stochastic_restore(AdaptiveModel& model, const ModelState& source, double p, std::mt19937_64& rng,
                               const std::vector<std::string>& names) {
  if (p < 0.0 || p > 1.0) throw Error(ErrorCode::kInvalidArgument, "restore probability must be in [0, 1]");
  if (source.version_tag != model.architecture_tag()) {
    throw Error(ErrorCode::kArchitectureMismatch, "restore source is from another architecture");
  }
  if (p == 0.0) return 0;
  std::bernoulli_distribution coin(p);
  std::size_t restored = 0;
  for (const auto& name : names) {
    const auto it = source.parameters.find(name);
    auto theta = model.parameter(name);
    if (it == source.parameters.end() || it->second.size() != theta.size()) {
      throw Error(ErrorCode::kShapeMismatch, "restore source lacks " + name);
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (p == 1.0 || coin(rng)) {
        theta[i] = it->second[i];
        ++restored;
      }
    }
  }
  return restored;
}

}  // namespace tta::methods
