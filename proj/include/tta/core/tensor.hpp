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
#include <span>
#include <vector>

namespace tta {

// Per-sample layout: `channels` rows of `length` values, stored channel-major.
struct Shape {
  std::size_t channels = 1;
  std::size_t length = 1;

  std::size_t size() const { return channels * length; }
  bool operator==(const Shape&) const = default;
};

// A batch of samples, each with the same Shape. Dense, row-major by sample.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t batch, Shape shape, double fill = 0.0)
      : batch_(batch), shape_(shape), data_(batch * shape.size(), fill) {}

  std::size_t batch() const { return batch_; }
  Shape shape() const { return shape_; }
  std::size_t features() const { return shape_.size(); }
  bool empty() const { return batch_ == 0; }

  double& operator()(std::size_t n, std::size_t c, std::size_t l) {
    return data_[n * shape_.size() + c * shape_.length + l];
  }
  double operator()(std::size_t n, std::size_t c, std::size_t l) const {
    return data_[n * shape_.size() + c * shape_.length + l];
  }
  double& at(std::size_t n, std::size_t f) { return data_[n * shape_.size() + f]; }
  double at(std::size_t n, std::size_t f) const { return data_[n * shape_.size() + f]; }

  std::span<double> row(std::size_t n) { return {data_.data() + n * shape_.size(), shape_.size()}; }
  std::span<const double> row(std::size_t n) const {
    return {data_.data() + n * shape_.size(), shape_.size()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Reinterprets the per-sample layout; total size must be preserved.
  void reshape(Shape shape);

  Tensor rows(std::span<const std::size_t> indices) const;
  Tensor rows(std::size_t begin, std::size_t end) const;
  void append_row(std::span<const double> values);

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t batch_ = 0;
  Shape shape_{};
  std::vector<double> data_;
};

Tensor concat_rows(std::span<const Tensor> parts);

}  // namespace tta
