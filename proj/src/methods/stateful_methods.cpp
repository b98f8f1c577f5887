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

#include <algorithm>
#include <cmath>

#include "tta/core/error.hpp"
#include "tta/core/log.hpp"
#include "tta/core/math.hpp"
#include "tta/methods/losses.hpp"
#include "tta/methods/methods.hpp"

namespace tta::methods {

// ---------------------------------------------------------------- no_adapt

Predictions NoAdapt::adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext&) {
  return predict(model, inputs);
}

Predictions NoAdapt::predict(AdaptiveModel& model, const Tensor& inputs) const {
  return Predictions::from_logits(model.forward(inputs).logits);
}

// ---------------------------------------------------------------- BN_Adapt

Predictions bn_adapt(AdaptiveModel& model, const Tensor& inputs, double prior) {
  if (!model.has_batch_norm()) throw Error(ErrorCode::kNoNormStats, "bn_adapt needs batch-norm layers");
  if (inputs.batch() < 2) throw Error(ErrorCode::kInvalidArgument, "bn_adapt needs at least two samples");
  if (!(prior >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "bn_adapt prior must be nonnegative");
  ForwardOptions o;
  o.stats = StatsSource::kMixture;
  o.prior_weight = prior;
  o.write_statistics = true;
  return Predictions::from_logits(model.forward(inputs, o).logits);
}

void BnAdapt::initialize(AdaptiveModel& model) {
  Strategy::initialize(model);
  active_ = model.has_batch_norm();
  if (!active_) log_warning("bn_adapt: model has no batch-norm statistics, running as a no-op");
}

// Mixes with the source statistics every time, so repeated calls on one batch are idempotent.
Predictions BnAdapt::adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext&) {
  if (!active_) return predict(model, inputs);
  const auto& stats = source().running_stats;
  for (const auto& layer : model.norm_layer_names()) {
    if (!model.norm_layer(layer).has_running_stats()) continue;
    model.set_norm_statistics(layer, stats.at(layer + ".running_mean"), stats.at(layer + ".running_var"));
  }
  return bn_adapt(model, inputs, hyperparameter("prior_n"));
}

Predictions BnAdapt::predict(AdaptiveModel& model, const Tensor& inputs) const {
  return Predictions::from_logits(model.forward(inputs).logits);
}

// ---------------------------------------------------------------- PBRS

PbrsBuffer::PbrsBuffer(std::size_t capacity, std::size_t classes) : capacity_(capacity), seen_(classes, 0) {
  if (capacity == 0) throw Error(ErrorCode::kInvalidArgument, "buffer capacity must be positive");
}

std::vector<std::size_t> PbrsBuffer::class_counts() const {
  std::vector<std::size_t> counts(seen_.size(), 0);
  for (const auto& e : entries_) ++counts[e.label];
  return counts;
}

void PbrsBuffer::insert(std::vector<double> x, std::size_t predicted, std::mt19937_64& rng) {
  if (predicted >= seen_.size()) throw Error(ErrorCode::kInvalidArgument, "predicted class out of range");
  ++seen_[predicted];
  if (entries_.size() < capacity_) {
    entries_.push_back({std::move(x), predicted});
    return;
  }
  const auto counts = class_counts();
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  auto pick_of_class = [&](std::size_t cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].label == cls) idx.push_back(i);
    std::uniform_int_distribution<std::size_t> u(0, idx.size() - 1);
    return idx[u(rng)];
  };
  if (counts[predicted] < top) {
    std::vector<std::size_t> majority;
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] == top) majority.push_back(c);
    std::uniform_int_distribution<std::size_t> u(0, majority.size() - 1);
    entries_[pick_of_class(majority[u(rng)])] = {std::move(x), predicted};
    return;
  }
  // the incoming class is already a majority class: reservoir sampling within it
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) <= static_cast<double>(counts[predicted]) / static_cast<double>(seen_[predicted])) {
    entries_[pick_of_class(predicted)] = {std::move(x), predicted};
  }
}

Tensor PbrsBuffer::inputs(Shape shape) const {
  Tensor out(0, shape);
  for (const auto& e : entries_) out.append_row(e.x);
  return out;
}

void PbrsBuffer::save(ByteWriter& out) const {
  out.put_u64(capacity_);
  out.put_u64(seen_.size());
  for (auto s : seen_) out.put_u64(s);
  out.put_u64(entries_.size());
  for (const auto& e : entries_) {
    out.put_u64(e.label);
    out.put_doubles(e.x);
  }
}

void PbrsBuffer::load(ByteReader& in) {
  capacity_ = in.get_u64();
  seen_.assign(in.get_u64(), 0);
  for (auto& s : seen_) s = in.get_u64();
  entries_.resize(in.get_u64());
  for (auto& e : entries_) {
    e.label = in.get_u64();
    e.x = in.get_doubles();
  }
}

// ---------------------------------------------------------------- NOTE

void Note::reset_extra(AdaptiveModel& model) {
  buffer_ = PbrsBuffer(int_hyperparameter("capacity"), model.class_count());
  batches_ = 0;
}

ForwardOptions Note::inference_options() const {
  ForwardOptions o;
  if (hyperparameter("iabn") != 0.0) {
    o.stats = StatsSource::kInstanceAware;
    o.iabn_k = hyperparameter("iabn_k");
  }
  return o;
}

GradientStrategy::Prepared Note::prepare(AdaptiveModel& model, const Tensor& inputs) {
  Prepared p;
  p.predictions = Predictions::from_logits(model.forward(inputs, inference_options()).logits);
  Tensor memory = buffer_.size() >= 2 ? buffer_.inputs(model.input_shape()) : inputs;
  ForwardOptions opts;
  opts.stats = StatsSource::kBatch;
  p.objective = std::make_unique<Objective>(update_parameters(model), [memory = std::move(memory), opts](AdaptiveModel& m,
                                                                                                         bool grad) {
    if (grad) m.zero_grad();
    const LossGrad lg = mean_entropy(m.forward(memory, opts).logits);
    if (grad) m.backward(lg.dlogits);
    return lg.value;
  });
  return p;
}

void Note::update(AdaptiveModel& model) {
  if (buffer_.size() < 2) return;
  const Tensor memory = buffer_.inputs(model.input_shape());
  if (model.has_batch_norm()) {
    ForwardOptions stats;
    stats.stats = StatsSource::kBatch;
    stats.update_running = true;
    stats.running_momentum = hyperparameter("bn_momentum");
    model.forward(memory, stats);
  }
  Prepared p = prepare_with_penalty(model, memory);
  apply_step(model, *p.objective);
}

Predictions Note::adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) {
  Predictions out = predict(model, inputs);
  if (ctx.step_index == 0) {
    for (std::size_t n = 0; n < inputs.batch(); ++n) {
      const auto r = inputs.row(n);
      buffer_.insert({r.begin(), r.end()}, out.labels[n], rng_);
    }
    ++batches_;
    const std::size_t every = std::max<std::size_t>(1, int_hyperparameter("update_every"));
    if (batches_ % every != 0) return out;
  }
  update(model);
  return out;
}

Predictions Note::predict(AdaptiveModel& model, const Tensor& inputs) const {
  return Predictions::from_logits(model.forward(inputs, inference_options()).logits);
}

void Note::save_extra(ByteWriter& out) const {
  buffer_.save(out);
  out.put_u64(batches_);
}

void Note::load_extra(ByteReader& in) {
  buffer_.load(in);
  batches_ = in.get_u64();
}

// ---------------------------------------------------------------- CoTTA

CoTta::CoTta(Hyperparameters hp) : GradientStrategy("cotta", std::move(hp)) {
  augmenter_ = Augmenter({hyperparameter("jitter"), hyperparameter("flip_prob"), int_hyperparameter("style_coordinate")});
}

void CoTta::reset_extra(AdaptiveModel& model) { teacher_.emplace(model); }

Tensor CoTta::teacher_probabilities(const Tensor& inputs, std::mt19937_64& rng) const {
  if (!teacher_) throw Error(ErrorCode::kInvalidArgument, "cotta used before initialize()");
  ForwardOptions opts;
  opts.stats = StatsSource::kBatch;
  Tensor probs = softmax_rows(teacher_->forward(inputs, opts).logits);
  const double conf = hyperparameter("conf_threshold");
  std::vector<std::size_t> low;
  for (std::size_t n = 0; n < probs.batch(); ++n) {
    const auto r = probs.row(n);
    if (*std::max_element(r.begin(), r.end()) < conf) low.push_back(n);
  }
  if (low.empty()) return probs;
  const std::size_t copies = std::max<std::size_t>(1, int_hyperparameter("augmentations"));
  const Tensor aug = augmenter_(inputs.rows(low), copies, rng);
  const Tensor ap = softmax_rows(teacher_->forward(aug, opts).logits);
  for (std::size_t j = 0; j < low.size(); ++j) {
    auto r = probs.row(low[j]);
    std::ranges::fill(r, 0.0);
    for (std::size_t k = 0; k < copies; ++k)
      for (std::size_t c = 0; c < r.size(); ++c) r[c] += ap.at(j * copies + k, c) / static_cast<double>(copies);
  }
  return probs;
}

GradientStrategy::Prepared CoTta::prepare(AdaptiveModel& model, const Tensor& inputs) {
  Tensor q = teacher_probabilities(inputs, rng_);
  Prepared p;
  p.predictions = Predictions::from_probabilities(q);
  const ForwardOptions opts = forward_options();
  p.objective = std::make_unique<Objective>(update_parameters(model),
                                            [inputs, q = std::move(q), opts](AdaptiveModel& m, bool grad) {
                                              if (grad) m.zero_grad();
                                              const LossGrad lg = soft_cross_entropy(m.forward(inputs, opts).logits, q);
                                              if (grad) m.backward(lg.dlogits);
                                              return lg.value;
                                            });
  return p;
}

void CoTta::after_step(AdaptiveModel& model) {
  const double m = hyperparameter("ema");
  for (const auto& name : model.parameter_names(ParamGroup::kAll)) {
    auto t = teacher_->parameter(name);
    const auto s = model.parameter(name);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = m * t[i] + (1.0 - m) * s[i];
  }
}

Predictions CoTta::predict(AdaptiveModel&, const Tensor& inputs) const {
  std::mt19937_64 rng(mix_seed(seed(), 0x636f747461ULL));
  return Predictions::from_probabilities(teacher_probabilities(inputs, rng));
}

void CoTta::save_extra(ByteWriter& out) const { out.put_string(encode_model_state(teacher_->snapshot())); }

void CoTta::load_extra(ByteReader& in) {
  const ModelState state = decode_model_state(in.get_string());
  if (!teacher_) throw Error(ErrorCode::kInvalidArgument, "cotta used before initialize()");
  teacher_->restore(state);
}

// ---------------------------------------------------------------- T3A

Tensor template_logits(const Tensor& embeddings, const std::vector<std::vector<double>>& templates) {
  Tensor out(embeddings.batch(), {templates.size(), 1});
  for (std::size_t n = 0; n < embeddings.batch(); ++n)
    for (std::size_t c = 0; c < templates.size(); ++c) out.at(n, c) = dot(embeddings.row(n), templates[c]);
  return out;
}

std::vector<std::vector<double>> SupportSet::templates() const {
  std::vector<std::vector<double>> out;
  out.reserve(classes.size());
  for (const auto& entries : classes) {
    std::vector<double> mean(entries.empty() ? 0 : entries.front().embedding.size(), 0.0);
    for (const auto& e : entries)
      for (std::size_t f = 0; f < mean.size(); ++f) mean[f] += e.embedding[f] / static_cast<double>(entries.size());
    out.push_back(std::move(mean));
  }
  return out;
}

void SupportSet::add(std::size_t label, std::vector<double> embedding, double entropy) {
  classes.at(label).push_back({std::move(embedding), entropy});
}

void SupportSet::trim() {
  for (auto& entries : classes) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.entropy < b.entropy; });
    if (capacity > 0 && entries.size() > capacity) entries.resize(capacity);
  }
}

void T3a::reset_extra(AdaptiveModel& model) {
  const Linear& head = model.classifier();
  const std::size_t classes = head.out_features();
  const std::size_t d = head.in_features();
  supports_ = SupportSet{};
  supports_.capacity = int_hyperparameter("supports");
  supports_.classes.assign(classes, {});
  std::vector<std::vector<double>> rows(classes);
  for (std::size_t c = 0; c < classes; ++c) rows[c].assign(head.weight().begin() + c * d, head.weight().begin() + (c + 1) * d);
  Tensor init(0, {d, 1});
  for (const auto& r : rows) init.append_row(r);
  const auto h = row_entropies(template_logits(init, rows));
  for (std::size_t c = 0; c < classes; ++c) supports_.add(c, rows[c], h[c]);
  supports_.trim();
}

// Whole batch is pseudo-labeled with the templates in force before the call.
Predictions T3a::adapt(AdaptiveModel& model, const Tensor& inputs, const StepContext& ctx) {
  if (ctx.step_index > 0) return predict(model, inputs);
  const Tensor z = model.embed(inputs);
  const Tensor logits = template_logits(z, supports_.templates());
  const auto labels = argmax_rows(logits);
  const auto h = row_entropies(logits);
  for (std::size_t n = 0; n < z.batch(); ++n) {
    const auto r = z.row(n);
    supports_.add(labels[n], {r.begin(), r.end()}, h[n]);
  }
  supports_.trim();
  return Predictions::from_logits(template_logits(z, supports_.templates()));
}

Predictions T3a::predict(AdaptiveModel& model, const Tensor& inputs) const {
  return Predictions::from_logits(template_logits(model.embed(inputs), supports_.templates()));
}

void T3a::save_extra(ByteWriter& out) const {
  out.put_u64(supports_.capacity);
  out.put_u64(supports_.classes.size());
  for (const auto& entries : supports_.classes) {
    out.put_u64(entries.size());
    for (const auto& e : entries) {
      out.put_f64(e.entropy);
      out.put_doubles(e.embedding);
    }
  }
}

void T3a::load_extra(ByteReader& in) {
  supports_.capacity = in.get_u64();
  supports_.classes.assign(in.get_u64(), {});
  for (auto& entries : supports_.classes) {
    entries.resize(in.get_u64());
    for (auto& e : entries) {
      e.entropy = in.get_f64();
      e.embedding = in.get_doubles();
    }
  }
}

}  // namespace tta::methods
