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

#include "tta/streams/dataset.hpp"

#include <algorithm>

#include "tta/core/error.hpp"
#include "tta/core/math.hpp"

namespace tta::streams {

namespace {

std::vector<double> uniform_proportions(std::size_t classes) {
  return std::vector<double>(classes, 1.0 / static_cast<double>(classes));
}

}  // namespace

// ---------------------------------------------------------------- InMemoryAdapter

InMemoryAdapter::InMemoryAdapter(Tensor inputs, std::vector<std::size_t> labels, std::size_t class_count)
    : inputs_(std::move(inputs)), classes_(class_count), by_label_(class_count) {
  if (labels.size() != inputs_.batch()) throw Error(ErrorCode::kShapeMismatch, "one label per input row required");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes_) throw Error(ErrorCode::kInvalidArgument, "label out of range");
    by_label_[labels[i]].push_back(i);
  }
}

AttributeSpace InMemoryAdapter::attribute_space() const {
  std::vector<double> counts(classes_);
  for (std::size_t c = 0; c < classes_; ++c) counts[c] = static_cast<double>(by_label_[c].size());
  return label_space(counts);
}

AttributeSpace InMemoryAdapter::slot_space(const std::vector<double>& label_proportions,
                                           std::optional<double>) const {
  if (label_proportions.empty()) return attribute_space();
  return label_space(label_proportions);
}

std::vector<double> InMemoryAdapter::example(std::size_t cell, std::size_t index) const {
  auto r = inputs_.row(by_label_.at(cell).at(index));
  return {r.begin(), r.end()};
}

std::vector<double> InMemoryAdapter::draw(std::size_t cell, std::mt19937_64& rng) const {
  const auto& rows = by_label_.at(cell);
  if (rows.empty()) throw Error(ErrorCode::kEmptyCell, "label " + std::to_string(cell));
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  return example(cell, pick(rng));
}

// ---------------------------------------------------------------- SyntheticTask

SyntheticTask::SyntheticTask(SyntheticTaskConfig config) : config_(config) {
  if (config_.classes < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  if (config_.correlation < -1.0 || config_.correlation > 1.0) {
    throw Error(ErrorCode::kInvalidCorrelation, std::to_string(config_.correlation));
  }
  if (config_.label_noise < 0.0 || config_.label_noise > 0.5) {
    throw Error(ErrorCode::kInvalidArgument, "label noise must be in [0, 0.5]");
  }
  std::mt19937_64 rng(mix_seed(config_.seed, 0x70));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = config_.input.size();
  prototypes_.assign(config_.classes, std::vector<double>(d));
  for (auto& p : prototypes_)
    for (double& v : p) v = config_.class_separation * normal(rng);
  styles_.assign(config_.classes, std::vector<double>(d));
  for (auto& s : styles_)
    for (double& v : s) v = normal(rng);
}

AttributeSpace SyntheticTask::attribute_space() const { return slot_space({}, std::nullopt); }

AttributeSpace SyntheticTask::slot_space(const std::vector<double>& label_proportions,
                                         std::optional<double> correlation) const {
  const auto labels = label_proportions.empty() ? uniform_proportions(config_.classes) : label_proportions;
  if (labels.size() != config_.classes) throw Error(ErrorCode::kShapeMismatch, "label proportions vs class count");
  if (!has_style()) return label_space(labels);
  return label_style_space(labels, config_.classes, correlation.value_or(config_.correlation));
}

std::size_t SyntheticTask::label_of_cell(std::size_t cell) const { return has_style() ? cell / config_.classes : cell; }

std::vector<double> SyntheticTask::generate(std::size_t cell, std::mt19937_64& rng) const {
  const std::size_t label = label_of_cell(cell);
  std::size_t latent = label;
  if (config_.label_noise > 0.0) {
    std::bernoulli_distribution flip(config_.label_noise);
    if (flip(rng)) {
      std::uniform_int_distribution<std::size_t> other(0, config_.classes - 2);
      const std::size_t o = other(rng);
      latent = o >= label ? o + 1 : o;
    }
  }
  std::normal_distribution<double> normal(0.0, config_.noise);
  std::vector<double> x = prototypes_[latent];
  if (has_style()) {
    const auto& s = styles_[cell % config_.classes];
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += config_.style_strength * s[i];
  }
  for (double& v : x) v += normal(rng);
  return x;
}

std::vector<double> SyntheticTask::example(std::size_t cell, std::size_t index) const {
  if (index >= config_.pool_per_cell) throw Error(ErrorCode::kInvalidArgument, "pool index out of range");
  std::mt19937_64 rng(mix_seed(mix_seed(config_.seed, 0x9001 + cell), index));
  return generate(cell, rng);
}

std::vector<double> SyntheticTask::draw(std::size_t cell, std::mt19937_64& rng) const { return generate(cell, rng); }

SpuriousTaskPair spurious_task(double rho_train, double rho_test, double label_noise, SyntheticTaskConfig base) {
  for (double rho : {rho_train, rho_test}) {
    if (rho < -1.0 || rho > 1.0) throw Error(ErrorCode::kInvalidCorrelation, std::to_string(rho));
  }
  if (label_noise < 0.0 || label_noise > 0.5) throw Error(ErrorCode::kInvalidArgument, "label noise must be in [0, 0.5]");
  if (base.style_strength == 0.0) base.style_strength = 1.5;
  base.label_noise = label_noise;
  SyntheticTaskConfig train_cfg = base;
  train_cfg.correlation = rho_train;
  SyntheticTaskConfig test_cfg = base;
  test_cfg.correlation = rho_test;
  return {SyntheticTask(train_cfg), SyntheticTask(test_cfg)};
}

LabeledSet sample_split(const DatasetAdapter& adapter, std::size_t n, std::uint64_t seed) {
  return sample_split(adapter, adapter.attribute_space(), n, seed);
}

LabeledSet sample_split(const DatasetAdapter& adapter, const AttributeSpace& space, std::size_t n,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledSet out;
  out.inputs = Tensor(0, adapter.input_shape());
  out.labels.reserve(n);
  out.cells.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = space.sample(rng);
    out.inputs.append_row(adapter.draw(cell, rng));
    out.labels.push_back(adapter.label_of_cell(cell));
    out.cells.push_back(cell);
  }
  return out;
}

}  // namespace tta::streams
