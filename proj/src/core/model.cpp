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

#include "tta/core/model.hpp"

#include <algorithm>

#include "tta/core/error.hpp"

namespace tta {

ParamGroup parse_param_group(std::string_view name) {
  if (name == "bn_affine" || name == "norm_affine") return ParamGroup::kNormAffine;
  if (name == "extractor") return ParamGroup::kExtractor;
  if (name == "classifier") return ParamGroup::kClassifier;
  if (name == "aux") return ParamGroup::kAux;
  if (name == "all") return ParamGroup::kAll;
  throw Error(ErrorCode::kUnknownGroup, std::string(name));
}

std::string_view to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::kNormAffine: return "bn_affine";
    case ParamGroup::kExtractor: return "extractor";
    case ParamGroup::kClassifier: return "classifier";
    case ParamGroup::kAux: return "aux";
    case ParamGroup::kAll: return "all";
  }
  return "all";
}

AdaptiveModel::AdaptiveModel(std::string architecture, Shape input_shape,
                             std::vector<std::unique_ptr<Layer>> extractor, std::size_t class_count,
                             std::size_t aux_classes)
    : input_shape_(input_shape), extractor_(std::move(extractor)), classifier_(1, class_count) {
  Shape shape = input_shape_;
  for (const auto& layer : extractor_) shape = layer->output_shape(shape);
  classifier_ = Linear(shape.size(), class_count);
  if (aux_classes > 0) aux_.emplace(shape.size(), aux_classes);

  tag_ = architecture + "|in=" + std::to_string(input_shape.channels) + "x" + std::to_string(input_shape.length);
  for (const auto& layer : extractor_) tag_ += "|" + layer->describe();
  tag_ += "|cls=" + classifier_.describe();
  if (aux_) tag_ += "|aux=" + aux_->describe();
  index();
}

AdaptiveModel::AdaptiveModel(const AdaptiveModel& other)
    : tag_(other.tag_), input_shape_(other.input_shape_), classifier_(other.classifier_), aux_(other.aux_) {
  extractor_.reserve(other.extractor_.size());
  for (const auto& layer : other.extractor_) extractor_.push_back(layer->clone());
  index();
}

// Parameter pointers reference members, so moves must re-index.
AdaptiveModel::AdaptiveModel(AdaptiveModel&& other) noexcept
    : tag_(std::move(other.tag_)),
      input_shape_(other.input_shape_),
      extractor_(std::move(other.extractor_)),
      classifier_(std::move(other.classifier_)),
      aux_(std::move(other.aux_)) {
  index();
}

AdaptiveModel& AdaptiveModel::operator=(AdaptiveModel&& other) noexcept {
  if (this == &other) return *this;
  tag_ = std::move(other.tag_);
  input_shape_ = other.input_shape_;
  extractor_ = std::move(other.extractor_);
  classifier_ = std::move(other.classifier_);
  aux_ = std::move(other.aux_);
  index();
  return *this;
}

AdaptiveModel& AdaptiveModel::operator=(const AdaptiveModel& other) {
  if (this == &other) return *this;
  AdaptiveModel copy(other);
  *this = std::move(copy);
  return *this;
}

void AdaptiveModel::index() {
  params_.clear();
  param_index_.clear();
  norm_layers_.clear();
  buffers_.clear();
  for (std::size_t i = 0; i < extractor_.size(); ++i) {
    const std::string prefix = "extractor." + std::to_string(i);
    auto* norm = dynamic_cast<Norm*>(extractor_[i].get());
    if (norm != nullptr) norm_layers_.emplace_back(prefix, norm);
    for (Parameter* p : extractor_[i]->parameters()) {
      params_.push_back({prefix + "." + p->name, norm ? ParamGroup::kNormAffine : ParamGroup::kExtractor, p});
    }
    for (auto& [name, buf] : extractor_[i]->buffers()) buffers_.emplace_back(prefix + "." + name, buf);
  }
  for (Parameter* p : classifier_.parameters()) params_.push_back({"classifier." + p->name, ParamGroup::kClassifier, p});
  if (aux_) {
    for (Parameter* p : aux_->parameters()) params_.push_back({"aux." + p->name, ParamGroup::kAux, p});
  }
  for (std::size_t i = 0; i < params_.size(); ++i) param_index_.emplace(params_[i].name, i);
}

Tensor AdaptiveModel::run_extractor(const Tensor& x, const ForwardOptions& opts) {
  if (x.shape() != input_shape_) throw Error(ErrorCode::kShapeMismatch, "input shape does not match model");
  Tensor h = x;
  for (auto& layer : extractor_) h = layer->forward(h, opts);
  return h;
}

void AdaptiveModel::backward_extractor(Tensor grad) {
  for (auto it = extractor_.rbegin(); it != extractor_.rend(); ++it) grad = (*it)->backward(grad);
}

AdaptiveModel::Outputs AdaptiveModel::forward(const Tensor& x, const ForwardOptions& opts) {
  Outputs out;
  out.embeddings = run_extractor(x, opts);
  out.logits = classifier_.forward(out.embeddings, opts);
  return out;
}

Tensor AdaptiveModel::embed(const Tensor& x, const ForwardOptions& opts) { return run_extractor(x, opts); }

Tensor AdaptiveModel::classify(const Tensor& embeddings) { return classifier_.forward(embeddings, {}); }

Tensor AdaptiveModel::forward_aux(const Tensor& x, const ForwardOptions& opts) {
  if (!aux_) throw Error(ErrorCode::kNoAuxHead, tag_);
  return aux_->forward(run_extractor(x, opts), opts);
}

void AdaptiveModel::backward(const Tensor& dlogits) { backward_extractor(classifier_.backward(dlogits)); }

void AdaptiveModel::backward_aux(const Tensor& daux) {
  if (!aux_) throw Error(ErrorCode::kNoAuxHead, tag_);
  backward_extractor(aux_->backward(daux));
}

void AdaptiveModel::zero_grad() {
  for (auto& e : params_) std::ranges::fill(e.param->grad, 0.0);
}

std::vector<std::string> AdaptiveModel::parameter_names(ParamGroup group) const {
  std::vector<std::string> names;
  for (const auto& e : params_) {
    if (group == ParamGroup::kAll || e.group == group) names.push_back(e.name);
  }
  return names;
}

std::vector<std::pair<std::string, std::span<const double>>> AdaptiveModel::parameters_of(
    std::string_view group) const {
  const ParamGroup g = parse_param_group(group);
  std::vector<std::pair<std::string, std::span<const double>>> out;
  for (const auto& e : params_) {
    if (g == ParamGroup::kAll || e.group == g) out.emplace_back(e.name, std::span<const double>(e.param->value));
  }
  return out;
}

const AdaptiveModel::ParamEntry& AdaptiveModel::entry(std::string_view name) const {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown parameter " + std::string(name));
  return params_[it->second];
}

std::span<double> AdaptiveModel::parameter(std::string_view name) { return entry(name).param->value; }

std::span<const double> AdaptiveModel::parameter(std::string_view name) const { return entry(name).param->value; }

std::span<const double> AdaptiveModel::gradient(std::string_view name) const { return entry(name).param->grad; }

GradientSet AdaptiveModel::gradients(ParamGroup group) const {
  GradientSet out;
  for (const auto& e : params_) {
    if (group == ParamGroup::kAll || e.group == group) out.emplace(e.name, e.param->grad);
  }
  return out;
}

std::size_t AdaptiveModel::parameter_count(ParamGroup group) const {
  std::size_t n = 0;
  for (const auto& e : params_) {
    if (group == ParamGroup::kAll || e.group == group) n += e.param->value.size();
  }
  return n;
}

std::vector<std::string> AdaptiveModel::norm_layer_names() const {
  std::vector<std::string> names;
  for (const auto& [name, layer] : norm_layers_) names.push_back(name);
  return names;
}

bool AdaptiveModel::has_batch_norm() const {
  return std::ranges::any_of(norm_layers_, [](const auto& nl) { return nl.second->has_running_stats(); });
}

const Norm& AdaptiveModel::norm_layer(std::string_view name) const {
  for (const auto& [n, layer] : norm_layers_) {
    if (n == name) return *layer;
  }
  throw Error(ErrorCode::kUnknownLayer, std::string(name));
}

void AdaptiveModel::set_norm_statistics(std::string_view layer, std::vector<double> mean, std::vector<double> var) {
  for (auto& [n, norm] : norm_layers_) {
    if (n == layer) {
      norm->set_running_stats(std::move(mean), std::move(var));
      return;
    }
  }
  throw Error(ErrorCode::kUnknownLayer, std::string(layer));
}

ModelState AdaptiveModel::snapshot() const {
  ModelState state;
  state.version_tag = tag_;
  for (const auto& e : params_) state.parameters.emplace(e.name, e.param->value);
  for (const auto& [name, buf] : buffers_) state.running_stats.emplace(name, *buf);
  return state;
}

void AdaptiveModel::restore(const ModelState& state) {
  if (state.version_tag != tag_) {
    throw Error(ErrorCode::kArchitectureMismatch, "state '" + state.version_tag + "' vs model '" + tag_ + "'");
  }
  if (state.parameters.size() != params_.size() || state.running_stats.size() != buffers_.size()) {
    throw Error(ErrorCode::kArchitectureMismatch, "state entry count differs from model");
  }
  // Validate everything before mutating so a failed restore leaves the model intact.
  for (const auto& e : params_) {
    auto it = state.parameters.find(e.name);
    if (it == state.parameters.end() || it->second.size() != e.param->value.size()) {
      throw Error(ErrorCode::kArchitectureMismatch, "parameter " + e.name);
    }
  }
  for (const auto& [name, buf] : buffers_) {
    auto it = state.running_stats.find(name);
    if (it == state.running_stats.end() || it->second.size() != buf->size()) {
      throw Error(ErrorCode::kArchitectureMismatch, "statistic " + name);
    }
  }
  for (auto& e : params_) e.param->value = state.parameters.at(e.name);
  for (auto& [name, buf] : buffers_) *buf = state.running_stats.at(name);
}

}  // namespace tta
