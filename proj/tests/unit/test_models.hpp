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

#include <memory>
#include <random>
#include <vector>

#include "tta/core/layers.hpp"
#include "tta/core/model.hpp"

namespace tta::testing {

// Small MLP over a flattened (channels x length) input: Flatten, Linear, Norm, Relu.
inline AdaptiveModel tiny_mlp(NormKind norm, std::uint64_t seed, Shape input = {2, 4}, std::size_t width = 6,
                              std::size_t classes = 3, std::size_t aux = 0) {
  std::mt19937_64 rng(seed);
  std::vector<std::unique_ptr<Layer>> layers;
  layers.push_back(std::make_unique<Flatten>());
  auto lin = std::make_unique<Linear>(input.size(), width);
  lin->init(rng, 1.4);
  layers.push_back(std::move(lin));
  layers.push_back(std::make_unique<Norm>(norm, width, norm == NormKind::kGroup ? 2 : 1));
  layers.push_back(std::make_unique<Relu>());
  AdaptiveModel m("tiny_mlp_" + std::to_string(static_cast<int>(norm)) + "_" + std::to_string(width), input,
                  std::move(layers), classes, aux);
  // move parameters off their defaults so gradient checks see generic values
  std::normal_distribution<double> n(0.0, 0.3);
  for (const auto& name : m.parameter_names(ParamGroup::kAll)) {
    for (double& v : m.parameter(name)) v += n(rng);
  }
  return m;
}

inline Tensor random_input(std::size_t batch, Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor x(batch, shape);
  for (double& v : x.data()) v = n(rng);
  return x;
}

}  // namespace tta::testing
