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
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tta/core/tensor.hpp"

namespace tta {

struct Parameter {
  std::string name;  // local to the owning layer, e.g. "weight"
  std::vector<double> value;
  std::vector<double> grad;
};

enum class NormKind { kBatch, kGroup, kLayer };

// Which statistics a batch-norm layer normalizes with. Group/layer norm
// always use per-sample statistics and ignore this setting.
enum class StatsSource {
  kRunning,        // stored running statistics (inference mode)
  kBatch,          // statistics of the current batch (training mode)
  kMixture,        // (N * running + m * batch) / (N + m), m = elements per channel
  kInstanceAware,  // per-sample statistics shrunk toward running stats
};

struct ForwardOptions {
  StatsSource stats = StatsSource::kRunning;
  bool update_running = false;  // exponential update of running stats, kBatch only
  double running_momentum = 0.1;
  double prior_weight = 0.0;      // N for kMixture
  bool write_statistics = false;  // kMixture: store the mixed statistics as running stats
  double iabn_k = 4.0;            // shrinkage width for kInstanceAware, in standard errors
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual std::string describe() const = 0;
  virtual Shape output_shape(Shape input) const = 0;

  // Caches whatever backward() needs; backward() must follow the matching forward().
  virtual Tensor forward(const Tensor& x, const ForwardOptions& opts) = 0;
  // Accumulates parameter gradients into Parameter::grad and returns d(loss)/d(input).
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<std::pair<std::string, std::vector<double>*>> buffers() { return {}; }
};

class Linear final : public Layer {
 public:
  Linear(std::size_t in_features, std::size_t out_features);

  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
  std::string describe() const override;
  Shape output_shape(Shape) const override { return {out_, 1}; }
  Tensor forward(const Tensor& x, const ForwardOptions& opts) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  const std::vector<double>& weight() const { return weight_.value; }
  const std::vector<double>& bias() const { return bias_.value; }

  void init(std::mt19937_64& rng, double gain);

 private:
  std::size_t in_;
  std::size_t out_;
  Parameter weight_;  // [out x in]
  Parameter bias_;
  Tensor input_;
};

// 1-D convolution with zero "same" padding; kernel size must be odd.
class Conv1d final : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);

  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1d>(*this); }
  std::string describe() const override;
  Shape output_shape(Shape input) const override { return {cout_, input.length}; }
  Tensor forward(const Tensor& x, const ForwardOptions& opts) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

  void init(std::mt19937_64& rng, double gain);

 private:
  std::size_t cin_;
  std::size_t cout_;
  std::size_t kernel_;
  Parameter weight_;  // [cout x cin x kernel]
  Parameter bias_;
  Tensor input_;
};

class Relu final : public Layer {
 public:
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  std::string describe() const override { return "relu"; }
  Shape output_shape(Shape input) const override { return input; }
  Tensor forward(const Tensor& x, const ForwardOptions& opts) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<bool> active_;
  Shape shape_{};
};

class Flatten final : public Layer {
 public:
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
  std::string describe() const override { return "flatten"; }
  Shape output_shape(Shape input) const override { return {input.size(), 1}; }
  Tensor forward(const Tensor& x, const ForwardOptions& opts) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape input_shape_{};
};

class Norm final : public Layer {
 public:
  Norm(NormKind kind, std::size_t channels, std::size_t groups = 1, double eps = 1e-5);

  std::unique_ptr<Layer> clone() const override { return std::make_unique<Norm>(*this); }
  std::string describe() const override;
  Shape output_shape(Shape input) const override { return input; }
  Tensor forward(const Tensor& x, const ForwardOptions& opts) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<std::pair<std::string, std::vector<double>*>> buffers() override;

  NormKind kind() const { return kind_; }
  std::size_t channels() const { return channels_; }
  bool has_running_stats() const { return kind_ == NormKind::kBatch; }
  const std::vector<double>& running_mean() const { return running_mean_; }
  const std::vector<double>& running_var() const { return running_var_; }
  void set_running_stats(std::vector<double> mean, std::vector<double> var);

  // Per-channel statistics of the most recent forward in kBatch/kMixture mode.
  const std::vector<double>& last_batch_mean() const { return batch_mean_; }
  const std::vector<double>& last_batch_var() const { return batch_var_; }

 private:
  Tensor forward_batch_norm(const Tensor& x, const ForwardOptions& opts);
  Tensor forward_group_norm(const Tensor& x);

  NormKind kind_;
  std::size_t channels_;
  std::size_t groups_;
  double eps_;
  Parameter gamma_;
  Parameter beta_;
  std::vector<double> running_mean_;
  std::vector<double> running_var_;

  // forward cache
  StatsSource used_ = StatsSource::kRunning;
  Tensor xhat_;
  std::vector<double> inv_std_;  // per channel (batch norm) or per (sample, group)
  std::vector<double> batch_mean_;
  std::vector<double> batch_var_;
};

}  // namespace tta
