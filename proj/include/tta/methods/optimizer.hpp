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

#include <map>
#include <string>
#include <vector>

#include "tta/core/model.hpp"
#include "tta/core/model_state.hpp"

namespace tta::methods {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  // learning_rate >= 0 and momentum in [0, 1); InvalidArgument otherwise.
  void validate() const;
};

// SGD with heavy-ball momentum: v <- mu * v + g, theta <- theta - eta * v.
class Sgd {
 public:
  explicit Sgd(OptimizerConfig config = {}) : config_(config) { config_.validate(); }

  const OptimizerConfig& config() const { return config_; }
  void set_learning_rate(double eta);

  // Applies one update to each named parameter using the model's stored gradients.
  void step(AdaptiveModel& model, const std::vector<std::string>& names);
  // Same, with externally supplied gradients.
  void step(AdaptiveModel& model, const GradientSet& gradients);

  void reset() { velocity_.clear(); }
  const std::map<std::string, std::vector<double>>& velocity() const { return velocity_; }

  void save(ByteWriter& out) const;
  void load(ByteReader& in);

 private:
  OptimizerConfig config_;
  std::map<std::string, std::vector<double>> velocity_;
};

}  // namespace tta::methods
