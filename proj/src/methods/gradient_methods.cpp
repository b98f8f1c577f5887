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
#include "tta/core/math.hpp"
#include "tta/methods/losses.hpp"
#include "tta/methods/methods.hpp"

namespace tta::methods {

namespace {

using LogitLoss = std::function<LossGrad(const Tensor& logits)>;

// Objective of the form loss(forward(inputs).logits) under fixed forward options.
std::unique_ptr<Objective> logit_objective(std::vector<std::string> names, Tensor inputs, ForwardOptions opts,
                                           LogitLoss loss) {
  return std::make_unique<Objective>(
      std::move(names), [inputs = std::move(inputs), opts, loss = std::move(loss)](AdaptiveModel& m, bool grad) {
        if (grad) m.zero_grad();
        const LossGrad lg = loss(m.forward(inputs, opts).logits);
        if (grad) m.backward(lg.dlogits);
        return lg.value;
      });
}

LossGrad add(LossGrad a, const LossGrad& b, double weight) {
  a.value += weight * b.value;
  for (std::size_t i = 0; i < a.dlogits.data().size(); ++i) a.dlogits.data()[i] += weight * b.dlogits.data()[i];
  return a;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot(a, b) / (na * nb);
}

std::vector<std::size_t> nearest(const Tensor& z, const std::vector<std::vector<double>>& centroids) {
  std::vector<std::size_t> labels(z.batch());
  for (std::size_t n = 0; n < z.batch(); ++n) {
    double best = 0.0;
    for (std::size_t k = 0; k < centroids.size(); ++k) {
      const double d = cosine_distance(z.row(n), centroids[k]);
      if (k == 0 || d < best) {
        best = d;
        labels[n] = k;
      }
    }
  }
  return labels;
}

}  // namespace

// ---------------------------------------------------------------- TENT

GradientStrategy::Prepared Tent::prepare(AdaptiveModel& model, const Tensor& inputs) {
  const ForwardOptions opts = forward_options();
  Prepared p;
  p.predictions = Predictions::from_logits(model.forward(inputs, opts).logits);
  p.objective = logit_objective(update_parameters(model), inputs, opts,
                                [](const Tensor& logits) { return mean_entropy(logits); });
  return p;
}

// ---------------------------------------------------------------- Conjugate PL

GradientStrategy::Prepared ConjugatePl::prepare(AdaptiveModel& model, const Tensor& inputs) {
  const double t = hyperparameter("temperature");
  if (!(t > 0.0)) throw Error(ErrorCode::kInvalidArgument, "conjugate_pl temperature must be positive");
  const ForwardOptions opts = forward_options();
  const Tensor logits = model.forward(inputs, opts).logits;
  Prepared p;
  p.predictions = Predictions::from_logits(logits);
  Tensor targets = softmax_rows(logits, t);
  p.objective = logit_objective(update_parameters(model), inputs, opts,
                                [targets = std::move(targets)](const Tensor& z) { return soft_cross_entropy(z, targets); });
  return p;
}

// ---------------------------------------------------------------- SAR

double Sar::entropy_threshold(std::size_t classes) const {
  return hyperparameter("e0_factor") * std::log(static_cast<double>(classes));
}

GradientStrategy::Prepared Sar::prepare(AdaptiveModel& model, const Tensor& inputs) {
  const ForwardOptions opts = forward_options();
  const Tensor logits = model.forward(inputs, opts).logits;
  const double e0 = entropy_threshold(model.class_count());
  const auto h = row_entropies(logits);
  std::vector<char> mask(h.size());
  any_selected_ = false;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mask[i] = h[i] < e0 ? 1 : 0;
    any_selected_ = any_selected_ || mask[i];
  }
  Prepared p;
  p.predictions = Predictions::from_logits(logits);
  p.objective = logit_objective(update_parameters(model), inputs, opts,
                                [mask = std::move(mask)](const Tensor& z) { return mean_entropy(z, mask); });
  return p;
}

void Sar::apply_step(AdaptiveModel& model, Objective& objective) {
  last_perturbation_ = 0.0;
  if (!any_selected_) return;
  const Evaluation first = objective.evaluate(model, true);
  double norm = 0.0;
  for (const auto& [name, g] : first.gradient)
    for (double v : g) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  const double rho = hyperparameter("rho");
  std::map<std::string, std::vector<double>> keep;
  double eps_norm = 0.0;
  for (const auto& [name, g] : first.gradient) {
    auto theta = model.parameter(name);
    keep[name].assign(theta.begin(), theta.end());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double before = theta[i];
      theta[i] += rho * g[i] / norm;
      eps_norm += (theta[i] - before) * (theta[i] - before);
    }
  }
  last_perturbation_ = std::sqrt(eps_norm);
  const Evaluation sharp = objective.evaluate(model, true);
  for (const auto& [name, values] : keep) std::ranges::copy(values, model.parameter(name).begin());
  optimizer_.step(model, sharp.gradient);
}

// ---------------------------------------------------------------- SHOT

std::vector<std::size_t> Shot::centroid_labels(const Tensor& z, const Tensor& probs) {
  const std::size_t classes = probs.features();
  const std::size_t d = z.features();
  std::vector<std::vector<double>> centroids(classes, std::vector<double>(d, 0.0));
  for (std::size_t k = 0; k < classes; ++k) {
    double mass = 0.0;
    for (std::size_t n = 0; n < z.batch(); ++n) {
      mass += probs.at(n, k);
      for (std::size_t f = 0; f < d; ++f) centroids[k][f] += probs.at(n, k) * z.at(n, f);
    }
    for (double& v : centroids[k]) v /= mass + 1e-8;
  }
  auto labels = nearest(z, centroids);
  for (auto& c : centroids) std::ranges::fill(c, 0.0);
  std::vector<double> count(classes, 0.0);
  for (std::size_t n = 0; n < z.batch(); ++n) {
    count[labels[n]] += 1.0;
    for (std::size_t f = 0; f < d; ++f) centroids[labels[n]][f] += z.at(n, f);
  }
  for (std::size_t k = 0; k < classes; ++k)
    for (double& v : centroids[k]) v /= count[k] + 1e-8;
  return nearest(z, centroids);
}

GradientStrategy::Prepared Shot::prepare(AdaptiveModel& model, const Tensor& inputs) {
  const ForwardOptions opts = forward_options();
  const auto out = model.forward(inputs, opts);
  const Tensor probs = softmax_rows(out.logits);
  const double beta = hyperparameter("beta");
  const double tau = hyperparameter("threshold");
  auto labels = centroid_labels(out.embeddings, probs);
  std::vector<char> mask(inputs.batch());
  for (std::size_t n = 0; n < inputs.batch(); ++n) {
    const auto r = probs.row(n);
    mask[n] = *std::max_element(r.begin(), r.end()) > tau ? 1 : 0;
  }
  const double b = static_cast<double>(inputs.batch());
  Prepared p;
  p.predictions = Predictions::from_probabilities(probs);
  p.objective = logit_objective(
      update_parameters(model), inputs, opts,
      [labels = std::move(labels), mask = std::move(mask), beta, b](const Tensor& z) {
        LossGrad im = information_maximization(z);
        if (beta == 0.0) return im;
        return add(std::move(im), hard_cross_entropy(z, labels, mask, b), beta);
      });
  return p;
}

// ---------------------------------------------------------------- TTT

void Ttt::initialize(AdaptiveModel& model) {
  if (!model.has_aux_head()) throw Error(ErrorCode::kNoAuxHead, "ttt needs a rotation head");
  if (model.aux_class_count() != kRotations) {
    throw Error(ErrorCode::kArchitectureMismatch, "ttt needs a 4-way rotation head");
  }
  GradientStrategy::initialize(model);
}

GradientStrategy::Prepared Ttt::prepare(AdaptiveModel& model, const Tensor& inputs) {
  const ForwardOptions opts = forward_options();
  Prepared p;
  p.predictions = Predictions::from_logits(model.forward(inputs, opts).logits);
  Tensor rotated = rotation_batch(inputs);
  std::vector<std::size_t> labels(rotated.batch());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i / inputs.batch();
  p.objective = std::make_unique<Objective>(
      update_parameters(model),
      [rotated = std::move(rotated), labels = std::move(labels), opts](AdaptiveModel& m, bool grad) {
        if (grad) m.zero_grad();
        const LossGrad lg = hard_cross_entropy(m.forward_aux(rotated, opts), labels);
        if (grad) m.backward_aux(lg.dlogits);
        return lg.value;
      });
  return p;
}

// ---------------------------------------------------------------- MEMO

Memo::Memo(Hyperparameters hp) : GradientStrategy("memo", std::move(hp)) {
  augmenter_ = Augmenter({hyperparameter("jitter"), hyperparameter("flip_prob"), int_hyperparameter("style_coordinate")});
}

std::size_t Memo::copies() const {
  const std::size_t b = int_hyperparameter("augmentations");
  if (b == 0) throw Error(ErrorCode::kInvalidArgument, "memo needs at least one augmentation");
  return b;
}

Predictions Memo::marginal_predictions(AdaptiveModel& model, const Tensor& augmented, std::size_t rows) const {
  const std::size_t b = copies();
  const Tensor probs = softmax_rows(model.forward(augmented, forward_options()).logits);
  Tensor mean(rows, probs.shape());
  for (std::size_t n = 0; n < rows; ++n)
    for (std::size_t k = 0; k < b; ++k)
      for (std::size_t c = 0; c < probs.features(); ++c) mean.at(n, c) += probs.at(n * b + k, c) / static_cast<double>(b);
  return Predictions::from_probabilities(std::move(mean));
}

// Per-sample marginal entropies, gradients accumulated one sample at a time
// and applied as a single update for the batch.
GradientStrategy::Prepared Memo::prepare(AdaptiveModel& model, const Tensor& inputs) {
  const std::size_t b = copies();
  last_augmented_ = augmenter_(inputs, b, rng_);
  Prepared p;
  p.predictions = marginal_predictions(model, last_augmented_, inputs.batch());
  const std::size_t rows = inputs.batch();
  const ForwardOptions opts = forward_options();
  p.objective = std::make_unique<Objective>(
      update_parameters(model), [aug = last_augmented_, rows, b, opts](AdaptiveModel& m, bool grad) {
        if (grad) m.zero_grad();
        const double scale = 1.0 / static_cast<double>(rows);
        double value = 0.0;
        for (std::size_t n = 0; n < rows; ++n) {
          LossGrad lg = marginal_entropy(m.forward(aug.rows(n * b, (n + 1) * b), opts).logits);
          value += scale * lg.value;
          if (grad) {
            for (double& v : lg.dlogits.data()) v *= scale;
            m.backward(lg.dlogits);
          }
        }
        return value;
      });
  return p;
}

Predictions Memo::predict(AdaptiveModel& model, const Tensor& inputs) const {
  std::mt19937_64 rng(mix_seed(seed(), 0x6d656d6fULL));
  return marginal_predictions(model, augmenter_(inputs, copies(), rng), inputs.batch());
}

}  // namespace tta::methods
