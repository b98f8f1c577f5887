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

#include "tta/core/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tta/core/error.hpp"

namespace tta {

namespace {

double soft_shrink(double x, double width) {
  if (x > width) return x - width;
  if (x < -width) return x + width;
  return 0.0;
}

}  // namespace

// ---------------------------------------------------------------- Linear

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : in_(in_features),
      out_(out_features),
      weight_{"weight", std::vector<double>(in_features * out_features, 0.0),
              std::vector<double>(in_features * out_features, 0.0)},
      bias_{"bias", std::vector<double>(out_features, 0.0), std::vector<double>(out_features, 0.0)} {}

std::string Linear::describe() const {
  return "linear(" + std::to_string(in_) + "," + std::to_string(out_) + ")";
}

void Linear::init(std::mt19937_64& rng, double gain) {
  std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(in_)));
  for (double& w : weight_.value) w = normal(rng);
  std::ranges::fill(bias_.value, 0.0);
}

Tensor Linear::forward(const Tensor& x, const ForwardOptions&) {
  if (x.features() != in_) throw Error(ErrorCode::kShapeMismatch, describe() + " got " + std::to_string(x.features()));
  input_ = x;
  Tensor y(x.batch(), {out_, 1});
  const auto& w = weight_.value;
  for (std::size_t n = 0; n < x.batch(); ++n) {
    auto xr = x.row(n);
    for (std::size_t o = 0; o < out_; ++o) {
      double acc = bias_.value[o];
      const double* wr = w.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
      y.at(n, o) = acc;
    }
  }
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  Tensor dx(input_.batch(), input_.shape());
  const auto& w = weight_.value;
  auto& dw = weight_.grad;
  for (std::size_t n = 0; n < input_.batch(); ++n) {
    auto xr = input_.row(n);
    auto dxr = dx.row(n);
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = grad_out.at(n, o);
      if (g == 0.0) continue;
      bias_.grad[o] += g;
      const double* wr = w.data() + o * in_;
      double* dwr = dw.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        dwr[i] += g * xr[i];
        dxr[i] += g * wr[i];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : cin_(in_channels),
      cout_(out_channels),
      kernel_(kernel),
      weight_{"weight", std::vector<double>(out_channels * in_channels * kernel, 0.0),
              std::vector<double>(out_channels * in_channels * kernel, 0.0)},
      bias_{"bias", std::vector<double>(out_channels, 0.0), std::vector<double>(out_channels, 0.0)} {
  if (kernel % 2 == 0) throw Error(ErrorCode::kInvalidArgument, "conv1d kernel must be odd");
}

std::string Conv1d::describe() const {
  return "conv1d(" + std::to_string(cin_) + "," + std::to_string(cout_) + ",k" + std::to_string(kernel_) + ")";
}

void Conv1d::init(std::mt19937_64& rng, double gain) {
  std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(cin_ * kernel_)));
  for (double& w : weight_.value) w = normal(rng);
  std::ranges::fill(bias_.value, 0.0);
}

Tensor Conv1d::forward(const Tensor& x, const ForwardOptions&) {
  if (x.shape().channels != cin_) throw Error(ErrorCode::kShapeMismatch, describe() + " channel mismatch");
  input_ = x;
  const std::size_t len = x.shape().length;
  const auto pad = static_cast<std::ptrdiff_t>(kernel_ / 2);
  Tensor y(x.batch(), {cout_, len});
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t co = 0; co < cout_; ++co) {
      for (std::size_t l = 0; l < len; ++l) {
        double acc = bias_.value[co];
        for (std::size_t ci = 0; ci < cin_; ++ci) {
          for (std::size_t j = 0; j < kernel_; ++j) {
            const auto src = static_cast<std::ptrdiff_t>(l) + static_cast<std::ptrdiff_t>(j) - pad;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            acc += weight_.value[(co * cin_ + ci) * kernel_ + j] * x(n, ci, static_cast<std::size_t>(src));
          }
        }
        y(n, co, l) = acc;
      }
    }
  }
  return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
  const std::size_t len = input_.shape().length;
  const auto pad = static_cast<std::ptrdiff_t>(kernel_ / 2);
  Tensor dx(input_.batch(), input_.shape());
  for (std::size_t n = 0; n < input_.batch(); ++n) {
    for (std::size_t co = 0; co < cout_; ++co) {
      for (std::size_t l = 0; l < len; ++l) {
        const double g = grad_out(n, co, l);
        if (g == 0.0) continue;
        bias_.grad[co] += g;
        for (std::size_t ci = 0; ci < cin_; ++ci) {
          for (std::size_t j = 0; j < kernel_; ++j) {
            const auto src = static_cast<std::ptrdiff_t>(l) + static_cast<std::ptrdiff_t>(j) - pad;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            const std::size_t widx = (co * cin_ + ci) * kernel_ + j;
            weight_.grad[widx] += g * input_(n, ci, static_cast<std::size_t>(src));
            dx(n, ci, static_cast<std::size_t>(src)) += g * weight_.value[widx];
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Relu / Flatten

Tensor Relu::forward(const Tensor& x, const ForwardOptions&) {
  shape_ = x.shape();
  Tensor y = x;
  active_.assign(x.data().size(), false);
  for (std::size_t i = 0; i < y.data().size(); ++i) {
    if (y.data()[i] > 0.0) {
      active_[i] = true;
    } else {
      y.data()[i] = 0.0;
    }
  }
  return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.data().size(); ++i) {
    if (!active_[i]) dx.data()[i] = 0.0;
  }
  return dx;
}

Tensor Flatten::forward(const Tensor& x, const ForwardOptions&) {
  input_shape_ = x.shape();
  Tensor y = x;
  y.reshape({x.features(), 1});
  return y;
}

Tensor Flatten::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  dx.reshape(input_shape_);
  return dx;
}

// ---------------------------------------------------------------- Norm

Norm::Norm(NormKind kind, std::size_t channels, std::size_t groups, double eps)
    : kind_(kind),
      channels_(channels),
      groups_(kind == NormKind::kLayer ? 1 : groups),
      eps_(eps),
      gamma_{"gamma", std::vector<double>(channels, 1.0), std::vector<double>(channels, 0.0)},
      beta_{"beta", std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)} {
  if (groups_ == 0 || channels % groups_ != 0) {
    throw Error(ErrorCode::kInvalidArgument, "group count must divide channel count");
  }
  if (kind_ == NormKind::kBatch) {
    running_mean_.assign(channels, 0.0);
    running_var_.assign(channels, 1.0);
  }
}

std::string Norm::describe() const {
  switch (kind_) {
    case NormKind::kBatch: return "bn(" + std::to_string(channels_) + ")";
    case NormKind::kGroup: return "gn(" + std::to_string(channels_) + ",g" + std::to_string(groups_) + ")";
    case NormKind::kLayer: return "ln(" + std::to_string(channels_) + ")";
  }
  return "norm";
}

std::vector<std::pair<std::string, std::vector<double>*>> Norm::buffers() {
  if (kind_ != NormKind::kBatch) return {};
  return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
}

void Norm::set_running_stats(std::vector<double> mean, std::vector<double> var) {
  if (kind_ != NormKind::kBatch) throw Error(ErrorCode::kNoNormStats, describe() + " has no running statistics");
  if (mean.size() != channels_ || var.size() != channels_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " expects " + std::to_string(channels_) + " channels");
  }
  for (double v : var) {
    if (v < 0.0) throw Error(ErrorCode::kNegativeVariance, describe());
  }
  running_mean_ = std::move(mean);
  running_var_ = std::move(var);
}

Tensor Norm::forward(const Tensor& x, const ForwardOptions& opts) {
  if (x.shape().channels != channels_) throw Error(ErrorCode::kShapeMismatch, describe() + " channel mismatch");
  if (kind_ == NormKind::kBatch) return forward_batch_norm(x, opts);
  return forward_group_norm(x);
}

Tensor Norm::forward_batch_norm(const Tensor& x, const ForwardOptions& opts) {
  const std::size_t n_batch = x.batch();
  const std::size_t len = x.shape().length;
  const double count = static_cast<double>(n_batch * len);
  used_ = opts.stats;

  Tensor y(n_batch, x.shape());
  xhat_ = Tensor(n_batch, x.shape());

  if (opts.stats == StatsSource::kInstanceAware) {
    // Per-sample statistics over the length axis, soft-shrunk toward the running
    // statistics by k standard errors of the corresponding estimator.
    inv_std_.clear();
    for (std::size_t c = 0; c < channels_; ++c) {
      const double mu_bn = running_mean_[c];
      const double var_bn = running_var_[c];
      const double se_mean = std::sqrt(var_bn / static_cast<double>(len));
      const double se_var = len > 1 ? std::sqrt(2.0 * var_bn * var_bn / static_cast<double>(len - 1))
                                    : std::numeric_limits<double>::infinity();
      for (std::size_t n = 0; n < n_batch; ++n) {
        double m = 0.0;
        for (std::size_t l = 0; l < len; ++l) m += x(n, c, l);
        m /= static_cast<double>(len);
        double v = 0.0;
        for (std::size_t l = 0; l < len; ++l) v += (x(n, c, l) - m) * (x(n, c, l) - m);
        v /= static_cast<double>(len);
        const double mu = mu_bn + soft_shrink(m - mu_bn, opts.iabn_k * se_mean);
        const double var = std::isinf(se_var) ? var_bn : var_bn + soft_shrink(v - var_bn, opts.iabn_k * se_var);
        const double inv = 1.0 / std::sqrt(std::max(var, 0.0) + eps_);
        for (std::size_t l = 0; l < len; ++l) {
          const double h = (x(n, c, l) - mu) * inv;
          xhat_(n, c, l) = h;
          y(n, c, l) = gamma_.value[c] * h + beta_.value[c];
        }
      }
    }
    return y;
  }

  batch_mean_.assign(channels_, 0.0);
  batch_var_.assign(channels_, 0.0);
  if (opts.stats != StatsSource::kRunning || opts.update_running) {
    for (std::size_t c = 0; c < channels_; ++c) {
      double m = 0.0;
      for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t l = 0; l < len; ++l) m += x(n, c, l);
      m /= count;
      double v = 0.0;
      for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t l = 0; l < len; ++l) v += (x(n, c, l) - m) * (x(n, c, l) - m);
      v /= count;
      batch_mean_[c] = m;
      batch_var_[c] = v;
    }
  }

  std::vector<double> mean(channels_);
  std::vector<double> var(channels_);
  for (std::size_t c = 0; c < channels_; ++c) {
    switch (opts.stats) {
      case StatsSource::kRunning:
        mean[c] = running_mean_[c];
        var[c] = running_var_[c];
        break;
      case StatsSource::kBatch:
        mean[c] = batch_mean_[c];
        var[c] = batch_var_[c];
        break;
      case StatsSource::kMixture: {
        const double prior = opts.prior_weight;
        mean[c] = (prior * running_mean_[c] + count * batch_mean_[c]) / (prior + count);
        var[c] = (prior * running_var_[c] + count * batch_var_[c]) / (prior + count);
        break;
      }
      case StatsSource::kInstanceAware:
        break;
    }
  }

  if (opts.stats == StatsSource::kBatch && opts.update_running) {
    const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
    for (std::size_t c = 0; c < channels_; ++c) {
      running_mean_[c] = (1.0 - opts.running_momentum) * running_mean_[c] + opts.running_momentum * batch_mean_[c];
      running_var_[c] =
          (1.0 - opts.running_momentum) * running_var_[c] + opts.running_momentum * batch_var_[c] * unbias;
    }
  }
  if (opts.stats == StatsSource::kMixture && opts.write_statistics) {
    running_mean_ = mean;
    running_var_ = var;
  }

  inv_std_.assign(channels_, 0.0);
  for (std::size_t c = 0; c < channels_; ++c) {
    inv_std_[c] = 1.0 / std::sqrt(var[c] + eps_);
    for (std::size_t n = 0; n < n_batch; ++n) {
      for (std::size_t l = 0; l < len; ++l) {
        const double h = (x(n, c, l) - mean[c]) * inv_std_[c];
        xhat_(n, c, l) = h;
        y(n, c, l) = gamma_.value[c] * h + beta_.value[c];
      }
    }
  }
  return y;
}

Tensor Norm::forward_group_norm(const Tensor& x) {
  const std::size_t n_batch = x.batch();
  const std::size_t len = x.shape().length;
  const std::size_t per_group = channels_ / groups_;
  const double count = static_cast<double>(per_group * len);
  used_ = StatsSource::kBatch;

  Tensor y(n_batch, x.shape());
  xhat_ = Tensor(n_batch, x.shape());
  inv_std_.assign(n_batch * groups_, 0.0);
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t g = 0; g < groups_; ++g) {
      const std::size_t c0 = g * per_group;
      double m = 0.0;
      for (std::size_t c = c0; c < c0 + per_group; ++c)
        for (std::size_t l = 0; l < len; ++l) m += x(n, c, l);
      m /= count;
      double v = 0.0;
      for (std::size_t c = c0; c < c0 + per_group; ++c)
        for (std::size_t l = 0; l < len; ++l) v += (x(n, c, l) - m) * (x(n, c, l) - m);
      v /= count;
      const double inv = 1.0 / std::sqrt(v + eps_);
      inv_std_[n * groups_ + g] = inv;
      for (std::size_t c = c0; c < c0 + per_group; ++c) {
        for (std::size_t l = 0; l < len; ++l) {
          const double h = (x(n, c, l) - m) * inv;
          xhat_(n, c, l) = h;
          y(n, c, l) = gamma_.value[c] * h + beta_.value[c];
        }
      }
    }
  }
  return y;
}

Tensor Norm::backward(const Tensor& grad_out) {
  const std::size_t n_batch = xhat_.batch();
  const std::size_t len = xhat_.shape().length;
  Tensor dx(n_batch, xhat_.shape());

  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t c = 0; c < channels_; ++c) {
      for (std::size_t l = 0; l < len; ++l) {
        gamma_.grad[c] += grad_out(n, c, l) * xhat_(n, c, l);
        beta_.grad[c] += grad_out(n, c, l);
      }
    }
  }

  if (kind_ == NormKind::kBatch) {
    if (used_ == StatsSource::kRunning) {
      for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t c = 0; c < channels_; ++c)
          for (std::size_t l = 0; l < len; ++l) dx(n, c, l) = grad_out(n, c, l) * gamma_.value[c] * inv_std_[c];
      return dx;
    }
    if (used_ != StatsSource::kBatch) {
      throw Error(ErrorCode::kInvalidArgument, "backward is only defined for running or batch statistics");
    }
    const double count = static_cast<double>(n_batch * len);
    for (std::size_t c = 0; c < channels_; ++c) {
      double s1 = 0.0;
      double s2 = 0.0;
      for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t l = 0; l < len; ++l) {
          const double dh = grad_out(n, c, l) * gamma_.value[c];
          s1 += dh;
          s2 += dh * xhat_(n, c, l);
        }
      }
      for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t l = 0; l < len; ++l) {
          const double dh = grad_out(n, c, l) * gamma_.value[c];
          dx(n, c, l) = inv_std_[c] * (dh - s1 / count - xhat_(n, c, l) * s2 / count);
        }
      }
    }
    return dx;
  }

  const std::size_t per_group = channels_ / groups_;
  const double count = static_cast<double>(per_group * len);
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t g = 0; g < groups_; ++g) {
      const std::size_t c0 = g * per_group;
      double s1 = 0.0;
      double s2 = 0.0;
      for (std::size_t c = c0; c < c0 + per_group; ++c) {
        for (std::size_t l = 0; l < len; ++l) {
          const double dh = grad_out(n, c, l) * gamma_.value[c];
          s1 += dh;
          s2 += dh * xhat_(n, c, l);
        }
      }
      const double inv = inv_std_[n * groups_ + g];
      for (std::size_t c = c0; c < c0 + per_group; ++c) {
        for (std::size_t l = 0; l < len; ++l) {
          const double dh = grad_out(n, c, l) * gamma_.value[c];
          dx(n, c, l) = inv * (dh - s1 / count - xhat_(n, c, l) * s2 / count);
        }
      }
    }
  }
  return dx;
}

}  // namespace tta
