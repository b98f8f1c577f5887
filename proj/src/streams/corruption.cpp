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

#include "tta/streams/corruption.hpp"

#include <algorithm>
#include <array>

#include "tta/core/error.hpp"

namespace tta::streams {

namespace {

constexpr std::array<double, 6> kNoiseStd = {0.0, 0.4, 0.7, 1.0, 1.4, 1.8};
constexpr std::array<double, 6> kContrastFactor = {1.0, 0.75, 0.55, 0.4, 0.28, 0.18};
constexpr std::array<int, 6> kBlurPasses = {0, 1, 2, 3, 5, 8};

// Circular [1/4, 1/2, 1/4] smoothing; symmetric with eigenvalues in [0, 1], so
// repeated passes move the signal monotonically further from the input.
void smooth_once(std::span<double> channel) {
  const std::size_t n = channel.size();
  if (n < 2) return;
  std::vector<double> src(channel.begin(), channel.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double left = src[(i + n - 1) % n];
    const double right = src[(i + 1) % n];
    channel[i] = 0.25 * left + 0.5 * src[i] + 0.25 * right;
  }
}

std::vector<double> block_average(std::span<const double> channel, std::size_t block) {
  std::vector<double> out(channel.size());
  for (std::size_t start = 0; start < channel.size(); start += block) {
    const std::size_t end = std::min(channel.size(), start + block);
    double m = 0.0;
    for (std::size_t i = start; i < end; ++i) m += channel[i];
    m /= static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) out[i] = m;
  }
  return out;
}

// Blend between nested block averages: identity -> P2 -> P4 -> P8. Nested
// projections make the residual norm nondecreasing along this path.
void pixelate_channel(std::span<double> channel, int severity) {
  struct Step {
    std::size_t fine;
    std::size_t coarse;
    double w;  // weight on the coarse average
  };
  static constexpr std::array<Step, 6> kSteps = {
      Step{1, 2, 0.0}, Step{1, 2, 0.5}, Step{1, 2, 1.0}, Step{2, 4, 0.5}, Step{2, 4, 1.0}, Step{4, 8, 0.5}};
  const Step s = kSteps[static_cast<std::size_t>(severity)];
  const auto fine = s.fine == 1 ? std::vector<double>(channel.begin(), channel.end()) : block_average(channel, s.fine);
  const auto coarse = block_average(channel, s.coarse);
  for (std::size_t i = 0; i < channel.size(); ++i) channel[i] = (1.0 - s.w) * fine[i] + s.w * coarse[i];
}

}  // namespace

Corruption parse_corruption(std::string_view name) {
  if (name == "gaussian_noise") return Corruption::kGaussianNoise;
  if (name == "blur") return Corruption::kBlur;
  if (name == "contrast") return Corruption::kContrast;
  if (name == "pixelate_analogue" || name == "pixelate") return Corruption::kPixelate;
  throw Error(ErrorCode::kUnknownCorruption, std::string(name));
}

std::string_view to_string(Corruption kind) {
  switch (kind) {
    case Corruption::kGaussianNoise: return "gaussian_noise";
    case Corruption::kBlur: return "blur";
    case Corruption::kContrast: return "contrast";
    case Corruption::kPixelate: return "pixelate_analogue";
  }
  return "unknown";
}

std::vector<std::string> corruption_names() { return {"gaussian_noise", "blur", "contrast", "pixelate_analogue"}; }

Tensor apply_corruption(const Tensor& x, Corruption kind, int severity, std::mt19937_64& rng) {
  if (severity < 0 || severity > kMaxSeverity) {
    throw Error(ErrorCode::kInvalidArgument, "severity must be in [0, 5], got " + std::to_string(severity));
  }
  Tensor out = x;
  if (severity == 0) return out;
  const auto sev = static_cast<std::size_t>(severity);
  const Shape shape = x.shape();
  switch (kind) {
    case Corruption::kGaussianNoise: {
      std::normal_distribution<double> normal(0.0, kNoiseStd[sev]);
      for (double& v : out.data()) v += normal(rng);
      break;
    }
    case Corruption::kContrast: {
      for (std::size_t n = 0; n < out.batch(); ++n) {
        auto r = out.row(n);
        double m = 0.0;
        for (double v : r) m += v;
        m /= static_cast<double>(r.size());
        for (double& v : r) v = m + (v - m) * kContrastFactor[sev];
      }
      break;
    }
    case Corruption::kBlur: {
      for (std::size_t n = 0; n < out.batch(); ++n) {
        for (std::size_t c = 0; c < shape.channels; ++c) {
          auto channel = out.row(n).subspan(c * shape.length, shape.length);
          for (int p = 0; p < kBlurPasses[sev]; ++p) smooth_once(channel);
        }
      }
      break;
    }
    case Corruption::kPixelate: {
      for (std::size_t n = 0; n < out.batch(); ++n) {
        for (std::size_t c = 0; c < shape.channels; ++c) {
          pixelate_channel(out.row(n).subspan(c * shape.length, shape.length), severity);
        }
      }
      break;
    }
  }
  return out;
}

Tensor apply_corruption(const Tensor& x, std::string_view kind, int severity, std::mt19937_64& rng) {
  return apply_corruption(x, parse_corruption(kind), severity, rng);
}

}  // namespace tta::streams
