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
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tta/core/tensor.hpp"
#include "tta/streams/attributes.hpp"

namespace tta::streams {

struct LabeledSet {
  Tensor inputs;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> cells;  // attribute cell each example was drawn from
};

// Source of labeled examples organised by attribute cell. Cell 0..n-1 follow
// the adapter's attribute space; the first attribute is always the label.
class DatasetAdapter {
 public:
  virtual ~DatasetAdapter() = default;

  virtual std::size_t class_count() const = 0;
  virtual Shape input_shape() const = 0;

  // Attribute distribution of this domain when nothing is overridden.
  virtual AttributeSpace attribute_space() const = 0;
  // Same attribute layout with the label marginal and/or the style-label
  // correlation replaced. Adapters without a style attribute ignore `correlation`.
  virtual AttributeSpace slot_space(const std::vector<double>& label_proportions,
                                    std::optional<double> correlation) const = 0;

  // Finite pool served to test streams.
  virtual std::size_t cell_size(std::size_t cell) const = 0;
  virtual std::vector<double> example(std::size_t cell, std::size_t index) const = 0;
  virtual std::size_t label_of_cell(std::size_t cell) const = 0;

  // A fresh example for training splits.
  virtual std::vector<double> draw(std::size_t cell, std::mt19937_64& rng) const = 0;
};

// Reference adapter over an in-memory labeled array; the only attribute is the
// label, and examples are served unchanged. Real corpora plug in by filling it.
class InMemoryAdapter final : public DatasetAdapter {
 public:
  InMemoryAdapter(Tensor inputs, std::vector<std::size_t> labels, std::size_t class_count);

  std::size_t class_count() const override { return classes_; }
  Shape input_shape() const override { return inputs_.shape(); }
  AttributeSpace attribute_space() const override;
  AttributeSpace slot_space(const std::vector<double>& label_proportions,
                            std::optional<double> correlation) const override;
  std::size_t cell_size(std::size_t cell) const override { return by_label_.at(cell).size(); }
  std::vector<double> example(std::size_t cell, std::size_t index) const override;
  std::size_t label_of_cell(std::size_t cell) const override { return cell; }
  std::vector<double> draw(std::size_t cell, std::mt19937_64& rng) const override;

 private:
  Tensor inputs_;
  std::size_t classes_;
  std::vector<std::vector<std::size_t>> by_label_;
};

struct SyntheticTaskConfig {
  std::size_t classes = 6;
  Shape input{2, 8};
  double class_separation = 1.0;  // std of prototype entries
  double noise = 1.0;             // within-class std
  double style_strength = 0.0;    // 0 disables the style attribute
  double correlation = 0.0;       // style-label correlation rho
  double label_noise = 0.0;       // probability the observed label differs from the generating class
  std::size_t pool_per_cell = 4096;
  std::uint64_t seed = 7;
};

// Gaussian class-prototype task on a (channels x length) signal, with an
// optional additive style vector whose value is correlated with the label.
class SyntheticTask final : public DatasetAdapter {
 public:
  explicit SyntheticTask(SyntheticTaskConfig config);

  const SyntheticTaskConfig& config() const { return config_; }
  bool has_style() const { return config_.style_strength != 0.0; }

  std::size_t class_count() const override { return config_.classes; }
  Shape input_shape() const override { return config_.input; }
  AttributeSpace attribute_space() const override;
  AttributeSpace slot_space(const std::vector<double>& label_proportions,
                            std::optional<double> correlation) const override;
  std::size_t cell_size(std::size_t) const override { return config_.pool_per_cell; }
  std::vector<double> example(std::size_t cell, std::size_t index) const override;
  std::size_t label_of_cell(std::size_t cell) const override;
  std::vector<double> draw(std::size_t cell, std::mt19937_64& rng) const override;

  const std::vector<double>& prototype(std::size_t label) const { return prototypes_.at(label); }

 private:
  std::vector<double> generate(std::size_t cell, std::mt19937_64& rng) const;

  SyntheticTaskConfig config_;
  std::vector<std::vector<double>> prototypes_;
  std::vector<std::vector<double>> styles_;
};

struct SpuriousTaskPair {
  SyntheticTask train;
  SyntheticTask test;
};

// Train/test domains that share prototypes and style vectors but couple the
// style to the label with different correlations.
SpuriousTaskPair spurious_task(double rho_train, double rho_test, double label_noise,
                               SyntheticTaskConfig base = {});

// Draws `n` i.i.d. examples from the adapter's own attribute distribution.
LabeledSet sample_split(const DatasetAdapter& adapter, std::size_t n, std::uint64_t seed);
LabeledSet sample_split(const DatasetAdapter& adapter, const AttributeSpace& space, std::size_t n,
                        std::uint64_t seed);

}  // namespace tta::streams
