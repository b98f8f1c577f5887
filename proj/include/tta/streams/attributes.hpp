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
#include <random>
#include <string>
#include <vector>

namespace tta::streams {

struct Attribute {
  std::string name;
  std::size_t cardinality = 0;
};

// Finite attribute space with an explicit joint probability table. Cells are
// enumerated row-major over the attribute list (last attribute fastest).
class AttributeSpace {
 public:
  AttributeSpace() = default;
  AttributeSpace(std::vector<Attribute> attributes, std::vector<double> table);

  const std::vector<Attribute>& attributes() const { return attributes_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t cell_count() const { return table_.size(); }

  std::vector<std::size_t> values_of(std::size_t cell) const;
  std::size_t cell_of(const std::vector<std::size_t>& values) const;
  std::size_t index_of(const std::string& attribute) const;
  std::vector<double> marginal(const std::string& attribute) const;

  std::size_t sample(std::mt19937_64& rng) const;

 private:
  std::vector<Attribute> attributes_;
  std::vector<double> table_;
  std::vector<double> cumulative_;
};

// Joint (label, style) table: labels follow `label_proportions`, and the style
// equals the label with probability (1 + rho) / 2, otherwise uniform over the rest.
AttributeSpace label_style_space(const std::vector<double>& label_proportions, std::size_t style_values, double rho);

AttributeSpace label_space(const std::vector<double>& label_proportions);

}  // namespace tta::streams
