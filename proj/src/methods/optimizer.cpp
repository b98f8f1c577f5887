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

#include "tta/methods/optimizer.hpp"

#include "tta/core/error.hpp"

namespace tta::methods {

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::kInvalidArgument, "momentum must be in [0, 1)");
}

void Sgd::set_learning_rate(double eta) {
  OptimizerConfig c = config_;
  c.learning_rate = eta;
  c.validate();
  config_ = c;
}

void Sgd::step(AdaptiveModel& model, const std::vector<std::string>& names) {
  GradientSet grads;
  for (const auto& name : names) {
    auto g = model.gradient(name);
    grads.emplace(name, std::vector<double>(g.begin(), g.end()));
  }
  step(model, grads);
}

void Sgd::step(AdaptiveModel& model, const GradientSet& gradients) {
  for (const auto& [name, g] : gradients) {
    auto theta = model.parameter(name);
    if (g.size() != theta.size()) throw Error(ErrorCode::kShapeMismatch, "gradient for " + name);
    auto& v = velocity_[name];
    if (v.size() != g.size()) v.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      v[i] = config_.momentum * v[i] + g[i];
      theta[i] -= config_.learning_rate * v[i];
    }
  }
}

void Sgd::save(ByteWriter& out) const {
  out.put_u64(velocity_.size());
  for (const auto& [name, v] : velocity_) {
    out.put_string(name);
    out.put_doubles(v);
  }
}

void Sgd::load(ByteReader& in) {
  velocity_.clear();
  const auto n = in.get_u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = in.get_string();
    velocity_[name] = in.get_doubles();
  }
}

}  // namespace tta::methods
