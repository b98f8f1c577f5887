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

#include "tta/methods/losses.hpp"

#include <cmath>

#include "tta/core/error.hpp"
#include "tta/core/math.hpp"

namespace tta::methods {

namespace {

const double kLogFloor = std::log(kProbFloor);

bool selected(std::span<const char> mask, std::size_t i) { return mask.empty() || mask[i] != 0; }

void check_mask(const Tensor& logits, std::span<const char> mask) {
  if (!mask.empty() && mask.size() != logits.batch()) throw Error(ErrorCode::kShapeMismatch, "mask length vs batch");
}

}  // namespace

Tensor clamped_log_probs(const Tensor& logits) {
  Tensor out(logits.batch(), logits.shape());
  for (std::size_t n = 0; n < logits.batch(); ++n) {
    const auto ls = log_softmax(logits.row(n));
    auto r = out.row(n);
    for (std::size_t c = 0; c < ls.size(); ++c) r[c] = std::max(ls[c], kLogFloor);
  }
  return out;
}

Tensor logits_grad(const Tensor& probs, const Tensor& g) {
  Tensor dz(probs.batch(), probs.shape());
  for (std::size_t n = 0; n < probs.batch(); ++n) {
    const auto p = probs.row(n);
    const auto gn = g.row(n);
    double s = 0.0;
    for (double v : gn) s += v;
    auto d = dz.row(n);
    for (std::size_t c = 0; c < p.size(); ++c) d[c] = gn[c] - p[c] * s;
  }
  return dz;
}

// With l = clamped log p and p = softmax(z): H = -sum p l, and the derivative
// of H with respect to log_softmax_c is -p_c (l_c + [p_c not clamped]).
LossGrad mean_entropy(const Tensor& logits, std::span<const char> mask) {
  check_mask(logits, mask);
  const Tensor p = softmax_rows(logits);
  const Tensor l = clamped_log_probs(logits);
  std::size_t count = 0;
  for (std::size_t n = 0; n < logits.batch(); ++n) count += selected(mask, n) ? 1 : 0;
  LossGrad out;
  Tensor g(logits.batch(), logits.shape());
  if (count == 0) {
    out.dlogits = g;
    return out;
  }
  const double scale = 1.0 / static_cast<double>(count);
  for (std::size_t n = 0; n < logits.batch(); ++n) {
    if (!selected(mask, n)) continue;
    auto pn = p.row(n);
    auto ln = l.row(n);
    auto gn = g.row(n);
    for (std::size_t c = 0; c < pn.size(); ++c) {
      out.value -= scale * pn[c] * ln[c];
      const double unclamped = ln[c] > kLogFloor ? 1.0 : 0.0;
      gn[c] = -scale * pn[c] * (ln[c] + unclamped);
    }
  }
  out.dlogits = logits_grad(p, g);
  return out;
}

LossGrad soft_cross_entropy(const Tensor& logits, const Tensor& targets) {
  if (targets.batch() != logits.batch() || targets.features() != logits.features()) {
    throw Error(ErrorCode::kShapeMismatch, "soft targets vs logits");
  }
  const Tensor p = softmax_rows(logits);
  const Tensor l = clamped_log_probs(logits);
  const double scale = logits.batch() ? 1.0 / static_cast<double>(logits.batch()) : 0.0;
  LossGrad out;
  Tensor g(logits.batch(), logits.shape());
  for (std::size_t n = 0; n < logits.batch(); ++n) {
    auto qn = targets.row(n);
    auto ln = l.row(n);
    auto gn = g.row(n);
    for (std::size_t c = 0; c < qn.size(); ++c) {
      out.value -= scale * qn[c] * ln[c];
      gn[c] = ln[c] > kLogFloor ? -scale * qn[c] : 0.0;
    }
  }
  out.dlogits = logits_grad(p, g);
  return out;
}

LossGrad hard_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels, std::span<const char> mask,
                            double normalizer) {
  check_mask(logits, mask);
  if (labels.size() != logits.batch()) throw Error(ErrorCode::kShapeMismatch, "labels vs batch");
  const Tensor p = softmax_rows(logits);
  const Tensor l = clamped_log_probs(logits);
  std::size_t count = 0;
  for (std::size_t n = 0; n < logits.batch(); ++n) count += selected(mask, n) ? 1 : 0;
  const double denom = normalizer > 0.0 ? normalizer : static_cast<double>(count);
  LossGrad out;
  Tensor g(logits.batch(), logits.shape());
  if (count == 0) {
    out.dlogits = g;
    return out;
  }
  for (std::size_t n = 0; n < logits.batch(); ++n) {
    if (!selected(mask, n)) continue;
    const std::size_t y = labels[n];
    if (y >= logits.features()) throw Error(ErrorCode::kInvalidArgument, "label out of range");
    out.value -= l.at(n, y) / denom;
    if (l.at(n, y) > kLogFloor) g.at(n, y) = -1.0 / denom;
  }
  out.dlogits = logits_grad(p, g);
  return out;
}

LossGrad information_maximization(const Tensor& logits) {
  LossGrad out = mean_entropy(logits);
  const std::size_t b = logits.batch();
  if (b == 0) return out;
  const std::size_t classes = logits.features();
  const Tensor p = softmax_rows(logits);
  std::vector<double> mean(classes, 0.0);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t c = 0; c < classes; ++c) mean[c] += p.at(n, c) / static_cast<double>(b);
  // -H(mean): value sum_c m_c log m_c; d/dm_c = log m_c + 1 (log clamped)
  std::vector<double> dmean(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const double lm = std::log(std::max(mean[c], kProbFloor));
    out.value += mean[c] * lm;
    dmean[c] = lm + (mean[c] >= kProbFloor ? 1.0 : 0.0);
  }
  Tensor g(b, logits.shape());
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t c = 0; c < classes; ++c) g.at(n, c) = dmean[c] * p.at(n, c) / static_cast<double>(b);
  const Tensor dz = logits_grad(p, g);
  for (std::size_t i = 0; i < dz.data().size(); ++i) out.dlogits.data()[i] += dz.data()[i];
  return out;
}

LossGrad marginal_entropy(const Tensor& logits) {
  const std::size_t b = logits.batch();
  const std::size_t classes = logits.features();
  LossGrad out;
  out.dlogits = Tensor(b, logits.shape());
  if (b == 0) return out;
  const Tensor p = softmax_rows(logits);
  std::vector<double> mean(classes, 0.0);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t c = 0; c < classes; ++c) mean[c] += p.at(n, c) / static_cast<double>(b);
  std::vector<double> dmean(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const double lm = std::log(std::max(mean[c], kProbFloor));
    out.value -= mean[c] * lm;
    dmean[c] = -(lm + (mean[c] >= kProbFloor ? 1.0 : 0.0));
  }
  Tensor g(b, logits.shape());
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t c = 0; c < classes; ++c) g.at(n, c) = dmean[c] * p.at(n, c) / static_cast<double>(b);
  out.dlogits = logits_grad(p, g);
  return out;
}

std::vector<double> row_entropies(const Tensor& logits) {
  const Tensor p = softmax_rows(logits);
  const Tensor l = clamped_log_probs(logits);
  std::vector<double> h(logits.batch(), 0.0);
  for (std::size_t n = 0; n < logits.batch(); ++n)
    for (std::size_t c = 0; c < logits.features(); ++c) h[n] -= p.at(n, c) * l.at(n, c);
  return h;
}

}  // namespace tta::methods
