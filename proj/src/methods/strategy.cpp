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

#include "tta/methods/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tta/core/error.hpp"
#include "tta/core/log.hpp"
#include "tta/core/math.hpp"
#include "tta/methods/losses.hpp"

namespace tta::methods {

namespace {
constexpr std::uint32_t kAuxVersion = 1;
}

Predictions Predictions::from_logits(const Tensor& logits) { return from_probabilities(softmax_rows(logits)); }

Predictions Predictions::from_probabilities(Tensor probabilities) {
  Predictions p;
  p.labels = argmax_rows(probabilities);
  p.probabilities = std::move(probabilities);
  return p;
}

// ---------------------------------------------------------------- Objective

void Objective::add_penalty(ParameterMap anchor, ParameterMap omega, double lambda) {
  penalty_.emplace(std::move(anchor), std::move(omega), lambda);
}

Evaluation Objective::evaluate(AdaptiveModel& model, bool want_grad) {
  Evaluation e;
  e.value = compute_(model, want_grad);
  if (want_grad) {
    for (const auto& name : parameters_) {
      const auto g = model.gradient(name);
      e.gradient.emplace(name, std::vector<double>(g.begin(), g.end()));
    }
  }
  if (penalty_) {
    const auto& [anchor, omega, lambda] = *penalty_;
    ParameterMap theta;
    for (const auto& [name, w] : omega) {
      const auto v = model.parameter(name);
      theta.emplace(name, std::vector<double>(v.begin(), v.end()));
    }
    const Penalty p = fisher_penalty(theta, anchor, omega, lambda);
    e.value += p.value;
    if (want_grad) {
      for (const auto& [name, g] : p.gradient) {
        auto it = e.gradient.find(name);
        if (it == e.gradient.end()) continue;
        for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
      }
    }
  }
  return e;
}

// ---------------------------------------------------------------- Strategy

Strategy::Strategy(std::string name, Hyperparameters hyperparameters)
    : name_(std::move(name)), hp_(std::move(hyperparameters)) {
  OptimizerConfig oc;
  if (auto it = hp_.find("lr"); it != hp_.end()) oc.learning_rate = it->second;
  if (auto it = hp_.find("momentum"); it != hp_.end()) oc.momentum = it->second;
  optimizer_ = Sgd(oc);
}

double Strategy::hyperparameter(const std::string& key) const {
  const auto it = hp_.find(key);
  if (it == hp_.end()) throw Error(ErrorCode::kUnknownHyperparameter, name_ + "." + key);
  return it->second;
}

double Strategy::hyperparameter_or(const std::string& key, double fallback) const {
  const auto it = hp_.find(key);
  return it == hp_.end() ? fallback : it->second;
}

std::size_t Strategy::int_hyperparameter(const std::string& key) const {
  const double v = hyperparameter(key);
  if (v < 0.0 || std::floor(v) != v) {
    throw Error(ErrorCode::kInvalidArgument, name_ + "." + key + " must be a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::string> Strategy::update_parameters(const AdaptiveModel& model) const {
  std::set<std::string> wanted;
  for (ParamGroup g : update_groups())
    for (auto& n : model.parameter_names(g)) wanted.insert(n);
  std::vector<std::string> out;
  for (auto& n : model.parameter_names(ParamGroup::kAll))
    if (wanted.count(n)) out.push_back(n);
  return out;
}

void Strategy::set_learning_rate(double eta) {
  optimizer_.set_learning_rate(eta);
  hp_["lr"] = eta;
}

void Strategy::reseed(std::uint64_t seed) {
  seed_ = seed;
  rng_.seed(seed);
}

void Strategy::initialize(AdaptiveModel& model) {
  source_ = model.snapshot();
  optimizer_.reset();
  rng_.seed(seed_);
  reset_extra(model);
}

const ModelState& Strategy::source() const {
  if (!source_) throw Error(ErrorCode::kInvalidArgument, name_ + " used before initialize()");
  return *source_;
}

std::unique_ptr<Objective> Strategy::objective(AdaptiveModel&, const Tensor&) { return nullptr; }

AuxState Strategy::save_state() const {
  ByteWriter w;
  optimizer_.save(w);
  save_extra(w);
  return {kAuxVersion, w.take()};
}

void Strategy::load_state(const AuxState& state) {
  if (state.version != kAuxVersion) {
    throw Error(ErrorCode::kSchemaVersionMismatch, name_ + " aux state version " + std::to_string(state.version));
  }
  ByteReader r(state.blob);
  optimizer_.load(r);
  load_extra(r);
  if (!r.done()) throw Error(ErrorCode::kIoError, name_ + " aux state has trailing bytes");
}

// ---------------------------------------------------------------- GradientStrategy

void GradientStrategy::initialize(AdaptiveModel& model) {
  if (update_parameters(model).empty() && !update_groups().empty()) {
    throw Error(ErrorCode::kNoNormAffine, name() + " has no parameters to update on this model");
  }
  // Fisher weights survive re-initialization on the same architecture.
  if (!omega_.empty() && !source_matches(model)) omega_.clear();
  Strategy::initialize(model);
}

bool GradientStrategy::source_matches(const AdaptiveModel& model) const {
  for (const auto& [name, w] : omega_) {
    try {
      if (model.parameter(name).size() != w.size()) return false;
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

ForwardOptions GradientStrategy::forward_options() const {
  ForwardOptions o;
  o.stats = StatsSource::kBatch;
  return o;
}

void GradientStrategy::calibrate(AdaptiveModel& model, const Tensor& inputs) {
  const ModelState keep = model.snapshot();
  omega_ = fisher_weights(model, inputs, update_parameters(model));
  model.restore(keep);
}

GradientStrategy::Prepared GradientStrategy::prepare_with_penalty(AdaptiveModel& model, const Tensor& inputs) {
  const double lambda = hyperparameter_or("fisher_lambda", 0.0);
  if (lambda > 0.0 && omega_.empty()) {
    log_info(name() + ": no calibration inputs, Fisher weights taken from the first adapted batch");
    calibrate(model, inputs);
  }
  Prepared p = prepare(model, inputs);
  if (lambda > 0.0 && p.objective) {
    p.objective->add_penalty(source().parameters, omega_, lambda);
  }
  return p;
}

std::unique_ptr<Objective> GradientStrategy::objective(AdaptiveModel& model, const Tensor& inputs) {
  return prepare_with_penalty(model, inputs).objective;
}

void GradientStrategy::apply_step(AdaptiveModel& model, Objective& objective) {
  const Evaluation e = objective.evaluate(model, true);
  optimizer_.step(model, e.gradient);
}

Predictions GradientStrategy::adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext&) {
  Prepared p = prepare_with_penalty(model, inputs);
  if (p.objective) {
    apply_step(model, *p.objective);
    after_step(model);
    const double restore = hyperparameter_or("restore_p", 0.0);
    if (restore > 0.0) stochastic_restore(model, source(), restore, rng_, update_parameters(model));
  }
  if (predict_after_step()) return predict(model, inputs);
  return std::move(p.predictions);
}

Predictions GradientStrategy::predict(AdaptiveModel& model, const Tensor& inputs) const {
  return Predictions::from_logits(model.forward(inputs, forward_options()).logits);
}

}  // namespace tta::methods
