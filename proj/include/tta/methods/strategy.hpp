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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tta/core/model.hpp"
#include "tta/core/model_state.hpp"
#include "tta/methods/optimizer.hpp"
#include "tta/methods/regularizers.hpp"

namespace tta::methods {

using Hyperparameters = std::map<std::string, double>;

// Coarse properties of a method, as listed by `tta list-methods`.
struct Metadata {
  bool resets_model = false;
  bool requires_norm_stats = false;
  bool adjusts_pretraining = false;
};

struct Predictions {
  Tensor probabilities;  // [b x C]
  std::vector<std::size_t> labels;

  static Predictions from_logits(const Tensor& logits);
  static Predictions from_probabilities(Tensor probabilities);
};

// Position of an adapt() call inside the current batch: 0 for the first
// step on a batch, 1 for the second, and so on.
struct StepContext {
  std::size_t step_index = 0;
};

struct Evaluation {
  double value = 0.0;
  GradientSet gradient;  // filled only when requested
};

// A method's per-batch loss with every non-differentiated quantity (pseudo
// labels, filters, augmentations, teacher targets) frozen at construction.
class Objective {
 public:
  using Compute = std::function<double(AdaptiveModel&, bool want_grad)>;

  Objective(std::vector<std::string> parameters, Compute compute)
      : parameters_(std::move(parameters)), compute_(std::move(compute)) {}

  const std::vector<std::string>& parameters() const { return parameters_; }

  // Adds lambda * sum omega (theta - anchor)^2 over the penalised parameters.
  void add_penalty(ParameterMap anchor, ParameterMap omega, double lambda);

  Evaluation evaluate(AdaptiveModel& model, bool want_grad);

 private:
  std::vector<std::string> parameters_;
  Compute compute_;
  std::optional<std::tuple<ParameterMap, ParameterMap, double>> penalty_;
};

class Strategy {
 public:
  Strategy(std::string name, Hyperparameters hyperparameters);
  virtual ~Strategy() = default;
  Strategy(const Strategy&) = delete;
  Strategy& operator=(const Strategy&) = delete;

  const std::string& name() const { return name_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  double hyperparameter(const std::string& key) const;
  double hyperparameter_or(const std::string& key, double fallback) const;

  virtual Metadata metadata() const = 0;
  virtual std::vector<ParamGroup> update_groups() const = 0;
  std::vector<std::string> update_parameters(const AdaptiveModel& model) const;

  void set_learning_rate(double eta);
  double learning_rate() const { return optimizer_.config().learning_rate; }
  void reseed(std::uint64_t seed);
  std::uint64_t seed() const { return seed_; }

  // Captures the source state and clears every piece of method state.
  virtual void initialize(AdaptiveModel& model);

  // One adaptation step on unlabeled inputs; returns the predictions the
  // method emits for this call.
  virtual Predictions adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) = 0;

  // Predictions of the current (model, method state) pair; leaves both unchanged.
  virtual Predictions predict(AdaptiveModel& model, const Tensor& inputs) const = 0;

  // The loss the next adapt() call would descend on; nullptr for gradient-free methods.
  virtual std::unique_ptr<Objective> objective(AdaptiveModel& model, const Tensor& inputs);

  // Method-owned state (optimizer momentum, supports, buffers, teacher).
  AuxState save_state() const;
  void load_state(const AuxState& state);

  const ModelState& source() const;

 protected:
  virtual void save_extra(ByteWriter&) const {}
  virtual void load_extra(ByteReader&) {}
  virtual void reset_extra(AdaptiveModel&) {}

  std::size_t int_hyperparameter(const std::string& key) const;

  Sgd optimizer_;
  mutable std::mt19937_64 rng_;

 private:
  std::string name_;
  Hyperparameters hp_;
  std::uint64_t seed_ = 0;
  std::optional<ModelState> source_;
};

// Shared driver for methods that take one optimizer step per adapt() call on
// an Objective: optional Fisher penalty and stochastic restore included.
class GradientStrategy : public Strategy {
 public:
  using Strategy::Strategy;

  void initialize(AdaptiveModel& model) override;
  Predictions adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) override;
  Predictions predict(AdaptiveModel& model, const Tensor& inputs) const override;
  std::unique_ptr<Objective> objective(AdaptiveModel& model, const Tensor& inputs) override;

  // Fisher weights from calibration inputs; without a call, the first adapted
  // batch is used when the penalty is enabled.
  void calibrate(AdaptiveModel& model, const Tensor& inputs);
  const ParameterMap& fisher_omega() const { return omega_; }

 protected:
  struct Prepared {
    std::unique_ptr<Objective> objective;
    Predictions predictions;
  };
  virtual Prepared prepare(AdaptiveModel& model, const Tensor& inputs) = 0;
  virtual void apply_step(AdaptiveModel& model, Objective& objective);
  virtual void after_step(AdaptiveModel&) {}
  virtual bool predict_after_step() const { return false; }
  virtual ForwardOptions forward_options() const;

  Prepared prepare_with_penalty(AdaptiveModel& model, const Tensor& inputs);

 private:
  bool source_matches(const AdaptiveModel& model) const;

  ParameterMap omega_;
};

}  // namespace tta::methods
