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

#include <functional>
#include <string>
#include <vector>

#include "tta/core/model.hpp"
#include "tta/harness/config.hpp"
#include "tta/harness/scenario.hpp"
#include "tta/selection/selection.hpp"

namespace tta::harness {

struct SummaryRow {
  std::string method;
  std::string protocol;
  double mean_error = 0.0;  // percent
  double std_error = 0.0;   // sample std over seeds; 0 for one seed
  std::size_t runs = 0;
};

struct Evaluation {
  std::string scenario;
  double source_val_accuracy = 0.0;
  std::vector<selection::RunRecord> records;  // (method, protocol, seed) order
  std::vector<SummaryRow> summary;
  std::vector<Annotation> annotations;
};

// Error of one record. Domain-uniform averages the per-domain errors, where
// `slot_domains[slot_id]` names the domain; otherwise sample-weighted.
double record_error(const selection::RunRecord& r, const std::vector<std::string>& slot_domains, bool domain_uniform);

std::vector<SummaryRow> summarize(const std::vector<selection::RunRecord>& records,
                                  const std::vector<std::string>& slot_domains, bool domain_uniform);

// Runs `jobs` tasks on up to `threads` workers; task i writes only its own slot.
void parallel_for(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& task);

// One record per (method, protocol, seed), with no_adapt rows first when
// `include_baseline` is set.
Evaluation evaluate(const ExperimentConfig& cfg, const Scenario& scenario, const AdaptiveModel& source,
                    double source_val_accuracy = 0.0);
// Builds the scenario and checkpoint from the config.
Evaluation evaluate(const ExperimentConfig& cfg);
// Scenario "suite" runs every scenario in turn; any other name runs just that one.
std::vector<Evaluation> evaluate_suite(const ExperimentConfig& cfg);

// Grid search of every configured method under the first protocol, one result per (method, seed).
struct SweepResult {
  std::string method;
  std::string protocol;
  std::uint64_t seed = 0;
  std::string stream_hash;
  selection::GridResult grid;
};
std::vector<SweepResult> sweep(const ExperimentConfig& cfg, const Scenario& scenario, const AdaptiveModel& source);

std::string summary_table(const Evaluation& e);

}  // namespace tta::harness
