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

#include "tta/harness/scenario.hpp"

#include <filesystem>

#include "tta/core/error.hpp"

namespace tta::harness {

streams::StreamSpec Scenario::stream_for(std::uint64_t seed) const {
  streams::StreamSpec s = stream;
  s.seed = seed;
  return s;
}

std::vector<std::string> scenario_names() { return {"common_shifts", "label_shift", "spurious", "nonstationary"}; }

namespace {

std::vector<streams::SlotSpec> corruption_slots(const StreamConfig& sc, std::vector<std::string>& domains) {
  std::vector<streams::SlotSpec> slots;
  for (const auto& name : sc.corruptions) {
    streams::SlotSpec s;
    s.trials = sc.trials;
    s.corruption = name;
    s.severity = sc.severity;
    slots.push_back(s);
    domains.push_back(name);
  }
  if (slots.empty()) throw Error(ErrorCode::kConfigInvalid, "stream.corruptions is empty");
  return slots;
}

}  // namespace

Scenario build_scenario(const ExperimentConfig& cfg) {
  Scenario sc;
  sc.name = cfg.scenario;
  const StreamConfig& st = cfg.stream;
  sc.stream.batch_size = st.batch_size;
  if (cfg.scenario == "spurious") {
    auto pair = streams::spurious_task(st.rho_train, st.rho_test, st.label_noise, cfg.task);
    sc.source = std::make_shared<streams::SyntheticTask>(pair.train);
    sc.target = std::make_shared<streams::SyntheticTask>(pair.test);
  } else {
    sc.source = std::make_shared<streams::SyntheticTask>(cfg.task);
    sc.target = sc.source;
  }

  if (cfg.scenario == "common_shifts") {
    sc.stream.shift_kind = streams::ShiftKind::kAttributeValues;
    sc.stream.slots = corruption_slots(st, sc.slot_domains);
    sc.annotations = {{"CIFAR10-C baseline error", 44.3},
                      {"CIFAR10-C BN_Adapt error", 27.5},
                      {"CIFAR10-C MEMO episodic error", 38.1},
                      {"CIFAR10-C MEMO online error", 85.2},
                      {"TENT worst-case drop from hyperparameters", 59.2},
                      {"SHOT worst-case drop from hyperparameters", 64.4}};
  } else if (cfg.scenario == "label_shift") {
    if (st.slots == 0) throw Error(ErrorCode::kConfigInvalid, "stream.slots must be >= 1");
    sc.stream.shift_kind = streams::ShiftKind::kLabel;
    for (std::size_t i = 0; i < st.slots; ++i) {
      streams::SlotSpec s;
      s.trials = st.trials;
      s.sampler = streams::SamplerKind::kDirichletLabel;
      s.alpha = st.alpha;
      sc.stream.slots.push_back(s);
      sc.slot_domains.push_back("clean");
    }
    sc.annotations = {{"CIFAR10 alpha=0.01 baseline error", 7.8},
                      {"CIFAR10 alpha=0.01 BN_Adapt error", 77.8},
                      {"CIFAR10 alpha=0.1 baseline error", 5.5},
                      {"CIFAR10 alpha=0.1 BN_Adapt error", 64.5},
                      {"CIFAR10 alpha=1 baseline error", 6.5},
                      {"CIFAR10 alpha=1 BN_Adapt error", 18.2}};
  } else if (cfg.scenario == "spurious") {
    sc.stream.shift_kind = streams::ShiftKind::kAttributeRelationship;
    streams::SlotSpec s;
    s.trials = st.trials;
    sc.stream.slots = {s};
    sc.slot_domains = {"test_correlation"};
    sc.annotations = {{"ColoredMNIST baseline error", 85.6},
                      {"ColoredMNIST BN_Adapt error", 83.9},
                      {"Waterbirds baseline worst-group error", 29.1},
                      {"Waterbirds BN_Adapt worst-group error", 38.1}};
  } else if (cfg.scenario == "nonstationary") {
    sc.stream.shift_kind = streams::ShiftKind::kNonstationary;
    sc.stream.slots = corruption_slots(st, sc.slot_domains);
    for (auto& s : sc.stream.slots) s.sampler = streams::SamplerKind::kClassOrdered;
    sc.annotations = {{"CIFAR10-C continual baseline error", 44.3}, {"CIFAR10-C continual BN_Adapt error", 79.9}};
  } else {
    throw Error(ErrorCode::kConfigInvalid, "unknown scenario '" + cfg.scenario + "'");
  }
  sc.stream.validate();
  return sc;
}

pretrain::CheckpointSequence obtain_checkpoints(const ExperimentConfig& cfg, const Scenario& scenario) {
  if (!cfg.checkpoint_dir.empty()) {
    if (!std::filesystem::exists(cfg.checkpoint_dir))
      throw Error(ErrorCode::kMissingCheckpoint, "no checkpoint directory '" + cfg.checkpoint_dir + "'");
    return pretrain::load_checkpoints(cfg.checkpoint_dir);
  }
  return pretrain::train_base(*scenario.source, cfg.model, cfg.policy, cfg.train);
}

const pretrain::Checkpoint& pick_checkpoint(const pretrain::CheckpointSequence& seq, long index) {
  const long n = static_cast<long>(seq.checkpoints.size());
  const long i = index < 0 ? n + index : index;
  if (i < 0 || i >= n) throw Error(ErrorCode::kMissingCheckpoint, "checkpoint index " + std::to_string(index) + " out of range");
  return seq.checkpoints[static_cast<std::size_t>(i)];
}

AdaptiveModel source_model(const pretrain::CheckpointSequence& seq, long index) {
  AdaptiveModel m = pretrain::build_model(seq.spec, 0);
  m.restore(pick_checkpoint(seq, index).state);
  return m;
}

}  // namespace tta::harness
