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

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tta/methods/strategy.hpp"
#include "tta/pretrain/pretrain.hpp"
#include "tta/selection/selection.hpp"
#include "tta/streams/dataset.hpp"

namespace tta::harness {

struct MethodEntry {
  std::string name;
  methods::Hyperparameters hyperparameters;  // overrides only
};

// Stream knobs. Which ones matter depends on the scenario.
struct StreamConfig {
  std::size_t batch_size = 64;
  std::size_t trials = 512;  // per slot
  std::vector<std::string> corruptions = {"gaussian_noise", "contrast", "blur", "pixelate_analogue"};
  int severity = 3;
  double alpha = 0.01;        // label_shift
  std::size_t slots = 20;     // label_shift
  double rho_train = 0.8;     // spurious
  double rho_test = -0.8;     // spurious
  double label_noise = 0.1;   // spurious
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string scenario = "common_shifts";
  streams::SyntheticTaskConfig task;
  pretrain::ToyModelSpec model;
  pretrain::AugPolicy policy{pretrain::AugKind::kStandard};
  pretrain::TrainConfig train = [] {
    pretrain::TrainConfig t;
    t.seed = 1;
    return t;
  }();
  std::string checkpoint_dir;     // empty: train in process
  long checkpoint_index = -1;     // negative counts from the end
  std::vector<MethodEntry> methods;
  bool include_baseline = true;
  std::vector<selection::ProtocolMode> protocols = {selection::ProtocolMode::kEpisodicOracle,
                                                     selection::ProtocolMode::kOnlineOracle};
  double learning_rate = 1e-3;
  std::size_t max_steps = 50;
  bool record_runtime = false;
  StreamConfig stream;
  std::vector<std::uint64_t> seeds = {2022, 2023, 2024};
  std::vector<selection::GridCell> grid;  // empty: the default grid
  std::size_t threads = 1;
  bool domain_uniform = true;
  std::string output_dir = "results";
};

nlohmann::json to_json(const ExperimentConfig& cfg);

// Keys missing from `doc` keep their defaults. Unknown keys, bad values and
// unknown methods or hyperparameters throw ConfigInvalid.
ExperimentConfig config_from_json(const nlohmann::json& doc);

// "a.b.c=value". The value is read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides);

}  // namespace tta::harness
