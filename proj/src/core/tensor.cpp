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

#include "tta/core/tensor.hpp"

#include <algorithm>

#include "tta/core/error.hpp"

namespace tta {

void Tensor::reshape(Shape shape) {
  if (shape.size() != shape_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "reshape must preserve per-sample size");
  }
  shape_ = shape;
}

Tensor Tensor::rows(std::span<const std::size_t> indices) const {
  Tensor out(indices.size(), shape_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= batch_) throw Error(ErrorCode::kInvalidArgument, "row index out of range");
    std::ranges::copy(row(indices[i]), out.row(i).begin());
  }
  return out;
}

Tensor Tensor::rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > batch_) throw Error(ErrorCode::kInvalidArgument, "row range out of bounds");
  Tensor out(end - begin, shape_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * shape_.size()),
            data_.begin() + static_cast<std::ptrdiff_t>(end * shape_.size()), out.data_.begin());
  return out;
}

void Tensor::append_row(std::span<const double> values) {
  if (values.size() != shape_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "appended row has wrong size");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++batch_;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) return {};
  Tensor out(0, parts.front().shape());
  for (const auto& p : parts) {
    if (p.shape() != out.shape()) throw Error(ErrorCode::kShapeMismatch, "concat of mismatched shapes");
    for (std::size_t n = 0; n < p.batch(); ++n) out.append_row(p.row(n));
  }
  return out;
}

}  // namespace tta
