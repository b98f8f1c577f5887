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

#include <optional>
#include <vector>

#include "tta/methods/augment.hpp"
#include "tta/methods/strategy.hpp"

namespace tta::methods {

// Source model as is; the reference row of every table.
class NoAdapt final : public Strategy {
 public:
  explicit NoAdapt(Hyperparameters hp) : Strategy("no_adapt", std::move(hp)) {}
  Metadata metadata() const override { return {false, false, false}; }
  std::vector<ParamGroup> update_groups() const override { return {}; }
  Predictions adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) override;
  Predictions predict(AdaptiveModel& model, const Tensor& inputs) const override;
};

// Re-estimates batch-norm statistics as (N * source + m * batch) / (N + m).
class BnAdapt final : public Strategy {
 public:
  explicit BnAdapt(Hyperparameters hp) : Strategy("bn_adapt", std::move(hp)) {}
  Metadata metadata() const override { return {false, true, false}; }
  std::vector<ParamGroup> update_groups() const override { return {}; }
  void initialize(AdaptiveModel& model) override;
  Predictions adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) override;
  Predictions predict(AdaptiveModel& model, const Tensor& inputs) const override;

 private:
  bool active_ = false;
};

// Free-function form: replaces every batch-norm layer's statistics using
// `prior` as N and returns the predictions under the new statistics.
// NoNormStats when the model has no batch-norm layer.
Predictions bn_adapt(AdaptiveModel& model, const Tensor& inputs, double prior);

class Tent : public GradientStrategy {
 public:
  explicit Tent(Hyperparameters hp, std::string name = "tent") : GradientStrategy(std::move(name), std::move(hp)) {}
  Metadata metadata() const override { return {false, true, false}; }
  std::vector<ParamGroup> update_groups() const override { return {ParamGroup::kNormAffine}; }

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
};

// TENT objective with the Fisher anti-forgetting penalty switched on.
class FisherTent final : public Tent {
 public:
  explicit FisherTent(Hyperparameters hp) : Tent(std::move(hp), "fisher") {}
};

class ConjugatePl final : public GradientStrategy {
 public:
  explicit ConjugatePl(Hyperparameters hp) : GradientStrategy("conjugate_pl", std::move(hp)) {}
  Metadata metadata() const override { return {false, true, false}; }
  std::vector<ParamGroup> update_groups() const override { return {ParamGroup::kNormAffine}; }

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
};

class Sar final : public GradientStrategy {
 public:
  explicit Sar(Hyperparameters hp) : GradientStrategy("sar", std::move(hp)) {}
  Metadata metadata() const override { return {true, false, false}; }
  std::vector<ParamGroup> update_groups() const override { return {ParamGroup::kNormAffine}; }
  double entropy_threshold(std::size_t classes) const;
  // Norm of the last sharpness perturbation; 0 when the step was skipped.
  double last_perturbation_norm() const { return last_perturbation_; }

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
  void apply_step(AdaptiveModel& model, Objective& objective) override;

 private:
  double last_perturbation_ = 0.0;
  bool any_selected_ = false;
};

class Shot final : public GradientStrategy {
 public:
  explicit Shot(Hyperparameters hp) : GradientStrategy("shot", std::move(hp)) {}
  Metadata metadata() const override { return {false, false, false}; }
  std::vector<ParamGroup> update_groups() const override { return {ParamGroup::kExtractor, ParamGroup::kNormAffine}; }

  // Nearest-centroid pseudo-labels under cosine distance: centroids weighted by
  // the soft predictions, then one hard refinement round.
  static std::vector<std::size_t> centroid_labels(const Tensor& embeddings, const Tensor& probabilities);

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
};

class Ttt final : public GradientStrategy {
 public:
  explicit Ttt(Hyperparameters hp) : GradientStrategy("ttt", std::move(hp)) {}
  Metadata metadata() const override { return {false, false, true}; }
  std::vector<ParamGroup> update_groups() const override {
    return {ParamGroup::kExtractor, ParamGroup::kNormAffine, ParamGroup::kAux};
  }
  void initialize(AdaptiveModel& model) override;

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
  bool predict_after_step() const override { return true; }
};

class Memo final : public GradientStrategy {
 public:
  explicit Memo(Hyperparameters hp);
  Metadata metadata() const override { return {true, false, false}; }
  std::vector<ParamGroup> update_groups() const override { return {ParamGroup::kAll}; }
  Predictions predict(AdaptiveModel& model, const Tensor& inputs) const override;
  // Augmented copies used by the most recent objective, grouped by input row.
  const Tensor& last_augmented() const { return last_augmented_; }
  std::size_t copies() const;

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
  ForwardOptions forward_options() const override { return {}; }

 private:
  Predictions marginal_predictions(AdaptiveModel& model, const Tensor& augmented, std::size_t rows) const;

  Augmenter augmenter_;
  Tensor last_augmented_;
};

// Prediction-balanced reservoir over predicted classes.
class PbrsBuffer {
 public:
  struct Entry {
    std::vector<double> x;
    std::size_t label = 0;
  };

  PbrsBuffer() = default;
  PbrsBuffer(std::size_t capacity, std::size_t classes);

  void insert(std::vector<double> x, std::size_t predicted, std::mt19937_64& rng);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::size_t> class_counts() const;
  Tensor inputs(Shape shape) const;

  void save(ByteWriter& out) const;
  void load(ByteReader& in);

 private:
  std::size_t capacity_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::uint64_t> seen_;
};

class Note final : public GradientStrategy {
 public:
  explicit Note(Hyperparameters hp) : GradientStrategy("note", std::move(hp)) {}
  Metadata metadata() const override { return {false, true, true}; }
  std::vector<ParamGroup> update_groups() const override { return {ParamGroup::kNormAffine}; }
  Predictions adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) override;
  Predictions predict(AdaptiveModel& model, const Tensor& inputs) const override;
  const PbrsBuffer& buffer() const { return buffer_; }

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
  void reset_extra(AdaptiveModel& model) override;
  void save_extra(ByteWriter& out) const override;
  void load_extra(ByteReader& in) override;

 private:
  ForwardOptions inference_options() const;
  void update(AdaptiveModel& model);

  PbrsBuffer buffer_;
  std::uint64_t batches_ = 0;
};

class CoTta final : public GradientStrategy {
 public:
  explicit CoTta(Hyperparameters hp);
  Metadata metadata() const override { return {false, false, false}; }
  std::vector<ParamGroup> update_groups() const override { return {ParamGroup::kAll}; }
  Predictions predict(AdaptiveModel& model, const Tensor& inputs) const override;
  const AdaptiveModel& teacher() const { return *teacher_; }

 protected:
  Prepared prepare(AdaptiveModel& model, const Tensor& inputs) override;
  void after_step(AdaptiveModel& model) override;
  void reset_extra(AdaptiveModel& model) override;
  void save_extra(ByteWriter& out) const override;
  void load_extra(ByteReader& in) override;

 private:
  Tensor teacher_probabilities(const Tensor& inputs, std::mt19937_64& rng) const;

  Augmenter augmenter_;
  mutable std::optional<AdaptiveModel> teacher_;
};

// Per-class support sets of (embedding, entropy), lowest entropy first.
struct SupportSet {
  struct Entry {
    std::vector<double> embedding;
    double entropy = 0.0;
  };
  std::vector<std::vector<Entry>> classes;
  std::size_t capacity = 0;  // per class; 0 keeps everything

  std::vector<std::vector<double>> templates() const;
  void add(std::size_t label, std::vector<double> embedding, double entropy);
  void trim();
};

class T3a final : public Strategy {
 public:
  explicit T3a(Hyperparameters hp) : Strategy("t3a", std::move(hp)) {}
  Metadata metadata() const override { return {false, false, false}; }
  std::vector<ParamGroup> update_groups() const override { return {}; }
  Predictions adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) override;
  Predictions predict(AdaptiveModel& model, const Tensor& inputs) const override;
  const SupportSet& supports() const { return supports_; }

 protected:
  void reset_extra(AdaptiveModel& model) override;
  void save_extra(ByteWriter& out) const override;
  void load_extra(ByteReader& in) override;

 private:
  SupportSet supports_;
};

// Template logits: one row per embedding, one column per template.
Tensor template_logits(const Tensor& embeddings, const std::vector<std::vector<double>>& templates);

}  // namespace tta::methods
