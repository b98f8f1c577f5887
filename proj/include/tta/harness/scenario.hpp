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

#include "tta/core/model.hpp"
#include "tta/harness/config.hpp"
#include "tta/pretrain/pretrain.hpp"
#include "tta/streams/dataset.hpp"
#include "tta/streams/stream.hpp"

namespace tta::harness {

// A published full-scale number shown next to toy results. Never compared.
struct Annotation {
  std::string label;
  double value = 0.0;
};

struct Scenario {
  std::string name;
  std::shared_ptr<const streams::SyntheticTask> source;  // pretraining domain
  std::shared_ptr<const streams::SyntheticTask> target;  // stream domain
  streams::StreamSpec stream;                            // seed set per run
  std::vector<std::string> slot_domains;                 // domain label per slot
  std::vector<Annotation> annotations;

  streams::StreamSpec stream_for(std::uint64_t seed) const;
};

// common_shifts, label_shift, spurious, nonstationary.
std::vector<std::string> scenario_names();
Scenario build_scenario(const ExperimentConfig& cfg);

// Loads `cfg.checkpoint_dir` when set (MissingCheckpoint if absent), otherwise
// trains a sequence on the scenario's source domain.
pretrain::CheckpointSequence obtain_checkpoints(const ExperimentConfig& cfg, const Scenario& scenario);
const pretrain::Checkpoint& pick_checkpoint(const pretrain::CheckpointSequence& seq, long index);
// The model of `seq` restored to checkpoint `index`.
AdaptiveModel source_model(const pretrain::CheckpointSequence& seq, long index);

}  // namespace tta::harness
