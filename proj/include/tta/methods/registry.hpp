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

#include <memory>
#include <string>
#include <vector>

#include "tta/methods/strategy.hpp"

namespace tta::methods {

struct HyperparameterSpec {
  std::string key;
  double default_value = 0.0;
  std::string description;
  double min = 0.0;
  double max = 0.0;
  bool integer = false;
};

struct MethodInfo {
  std::string name;
  std::string summary;
  Metadata metadata;
  std::vector<HyperparameterSpec> hyperparameters;
};

// Every registered method in catalog order; no_adapt is listed last.
const std::vector<MethodInfo>& method_catalog();
const MethodInfo& method_info(const std::string& name);
std::vector<std::string> method_names();

// Defaults merged with `overrides`. UnknownMethod, UnknownHyperparameter, or
// InvalidArgument for a value outside its range.
Hyperparameters resolve_hyperparameters(const std::string& name, const Hyperparameters& overrides = {});
std::unique_ptr<Strategy> make_strategy(const std::string& name, const Hyperparameters& overrides = {});

}  // namespace tta::methods
