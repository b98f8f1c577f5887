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

#include "tta/streams/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tta/core/error.hpp"

namespace tta::streams {

AttributeSpace::AttributeSpace(std::vector<Attribute> attributes, std::vector<double> table)
    : attributes_(std::move(attributes)), table_(std::move(table)) {
  std::size_t cells = 1;
  for (const auto& a : attributes_) {
    if (a.cardinality == 0) throw Error(ErrorCode::kInvalidArgument, "attribute " + a.name + " has no values");
    cells *= a.cardinality;
  }
  if (attributes_.empty() || cells != table_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "probability table size does not match attribute cells");
  }
  double total = 0.0;
  for (double p : table_) {
    if (p < 0.0 || !std::isfinite(p)) throw Error(ErrorCode::kNotNormalized, "negative cell probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::kNotNormalized, "cell probabilities do not sum to 1");
  cumulative_.resize(table_.size());
  std::partial_sum(table_.begin(), table_.end(), cumulative_.begin());
}

std::vector<std::size_t> AttributeSpace::values_of(std::size_t cell) const {
  std::vector<std::size_t> values(attributes_.size());
  for (std::size_t k = attributes_.size(); k-- > 0;) {
    values[k] = cell % attributes_[k].cardinality;
    cell /= attributes_[k].cardinality;
  }
  return values;
}

std::size_t AttributeSpace::cell_of(const std::vector<std::size_t>& values) const {
  if (values.size() != attributes_.size()) throw Error(ErrorCode::kShapeMismatch, "attribute value count");
  std::size_t cell = 0;
  for (std::size_t k = 0; k < attributes_.size(); ++k) {
    if (values[k] >= attributes_[k].cardinality) {
      throw Error(ErrorCode::kInvalidArgument, "value out of range for attribute " + attributes_[k].name);
    }
    cell = cell * attributes_[k].cardinality + values[k];
  }
  return cell;
}

std::size_t AttributeSpace::index_of(const std::string& attribute) const {
  for (std::size_t k = 0; k < attributes_.size(); ++k) {
    if (attributes_[k].name == attribute) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown attribute " + attribute);
}

std::vector<double> AttributeSpace::marginal(const std::string& attribute) const {
  const std::size_t k = index_of(attribute);
  std::vector<double> out(attributes_[k].cardinality, 0.0);
  for (std::size_t cell = 0; cell < table_.size(); ++cell) out[values_of(cell)[k]] += table_[cell];
  return out;
}

std::size_t AttributeSpace::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, cumulative_.back());
  const double u = unit(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  auto cell = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  cell = std::min(cell, table_.size() - 1);
  // never return a zero-probability cell because of rounding at the upper end
  while (table_[cell] == 0.0 && cell > 0) --cell;
  return cell;
}

AttributeSpace label_style_space(const std::vector<double>& label_proportions, std::size_t style_values, double rho) {
  if (rho < -1.0 || rho > 1.0) throw Error(ErrorCode::kInvalidCorrelation, std::to_string(rho));
  const std::size_t classes = label_proportions.size();
  if (style_values < 2) throw Error(ErrorCode::kInvalidArgument, "style attribute needs at least two values");
  const double agree = (1.0 + rho) / 2.0;
  std::vector<double> table(classes * style_values, 0.0);
  for (std::size_t y = 0; y < classes; ++y) {
    for (std::size_t s = 0; s < style_values; ++s) {
      const double p_style = (s == y % style_values) ? agree : (1.0 - agree) / static_cast<double>(style_values - 1);
      table[y * style_values + s] = label_proportions[y] * p_style;
    }
  }
  const double total = std::accumulate(table.begin(), table.end(), 0.0);
  for (double& p : table) p /= total;
  return AttributeSpace({{"label", classes}, {"style", style_values}}, std::move(table));
}

AttributeSpace label_space(const std::vector<double>& label_proportions) {
  std::vector<double> table = label_proportions;
  const double total = std::accumulate(table.begin(), table.end(), 0.0);
  if (total <= 0.0) throw Error(ErrorCode::kNotNormalized, "label proportions sum to zero");
  for (double& p : table) p /= total;
  return AttributeSpace({{"label", label_proportions.size()}}, std::move(table));
}

}  // namespace tta::streams
