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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tta/core/layers.hpp"
#include "tta/core/model_state.hpp"
#include "tta/core/tensor.hpp"

namespace tta {

// Named parameter partitions. kNormAffine is exposed as "bn_affine" with the
// alias "norm_affine"; it holds batch/group/layer norm scale and shift alike.
enum class ParamGroup { kNormAffine, kExtractor, kClassifier, kAux, kAll };

ParamGroup parse_param_group(std::string_view name);
std::string_view to_string(ParamGroup group);

using GradientSet = std::map<std::string, std::vector<double>>;

// Live model: feature extractor -> embedding -> linear classifier, with an
// optional linear auxiliary head on the same embedding.
class AdaptiveModel {
 public:
  struct Outputs {
    Tensor embeddings;
    Tensor logits;
  };

  AdaptiveModel(std::string architecture, Shape input_shape, std::vector<std::unique_ptr<Layer>> extractor,
                std::size_t class_count, std::size_t aux_classes = 0);

  AdaptiveModel(const AdaptiveModel& other);
  AdaptiveModel& operator=(const AdaptiveModel& other);
  AdaptiveModel(AdaptiveModel&& other) noexcept;
  AdaptiveModel& operator=(AdaptiveModel&& other) noexcept;
  ~AdaptiveModel() = default;

  // Architecture tag; identical tags guarantee identical parameter layouts.
  const std::string& architecture_tag() const { return tag_; }
  Shape input_shape() const { return input_shape_; }
  std::size_t class_count() const { return classifier_.out_features(); }
  std::size_t embedding_dim() const { return classifier_.in_features(); }
  bool has_aux_head() const { return aux_.has_value(); }
  std::size_t aux_class_count() const { return aux_ ? aux_->out_features() : 0; }

  Outputs forward(const Tensor& x, const ForwardOptions& opts = {});
  Tensor embed(const Tensor& x, const ForwardOptions& opts = {});
  Tensor classify(const Tensor& embeddings);
  Tensor forward_aux(const Tensor& x, const ForwardOptions& opts = {});

  // Backward passes reuse the caches of the most recent forward()/forward_aux().
  void backward(const Tensor& dlogits);
  void backward_aux(const Tensor& daux);
  void zero_grad();

  std::vector<std::string> parameter_names(ParamGroup group) const;
  std::vector<std::pair<std::string, std::span<const double>>> parameters_of(std::string_view group) const;
  std::span<double> parameter(std::string_view name);
  std::span<const double> parameter(std::string_view name) const;
  std::span<const double> gradient(std::string_view name) const;
  GradientSet gradients(ParamGroup group) const;
  std::size_t parameter_count(ParamGroup group) const;

  std::vector<std::string> norm_layer_names() const;
  bool has_batch_norm() const;
  bool has_norm_affine() const { return !norm_layers_.empty(); }
  const Norm& norm_layer(std::string_view name) const;
  void set_norm_statistics(std::string_view layer, std::vector<double> mean, std::vector<double> var);

  const Linear& classifier() const { return classifier_; }

  ModelState snapshot() const;
  void restore(const ModelState& state);

 private:
  struct ParamEntry {
    std::string name;
    ParamGroup group;
    Parameter* param;
  };

  void index();
  Tensor run_extractor(const Tensor& x, const ForwardOptions& opts);
  void backward_extractor(Tensor grad);
  const ParamEntry& entry(std::string_view name) const;

  std::string tag_;
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer>> extractor_;
  Linear classifier_;
  std::optional<Linear> aux_;

  std::vector<ParamEntry> params_;
  std::map<std::string, std::size_t, std::less<>> param_index_;
  std::vector<std::pair<std::string, Norm*>> norm_layers_;
  std::vector<std::pair<std::string, std::vector<double>*>> buffers_;
};

}  // namespace tta
