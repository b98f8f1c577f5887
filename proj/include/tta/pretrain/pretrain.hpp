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
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tta/core/model.hpp"
#include "tta/streams/dataset.hpp"

namespace tta::pretrain {

enum class Architecture { kMlpBn, kMlpGn, kMlpLn, kSmallConvBn };

Architecture parse_architecture(std::string_view name);
std::string_view to_string(Architecture arch);

struct ToyModelSpec {
  Architecture architecture = Architecture::kMlpBn;
  std::size_t width = 32;
  std::size_t depth = 2;  // hidden blocks
  std::size_t classes = 6;
  Shape input{2, 8};
  bool aux_head = false;  // 4-way rotation head
};

// Fresh model with randomly initialised weights; deterministic in seed.
AdaptiveModel build_model(const ToyModelSpec& spec, std::uint64_t seed);

enum class AugKind { kNone, kStandard, kMixupStandard, kStrongA, kStrongB };

AugKind parse_aug_kind(std::string_view name);
std::string_view to_string(AugKind kind);

struct AugPolicy {
  AugKind kind = AugKind::kNone;
  double jitter = 0.3;     // std of the additive jitter in standard and strong policies
  double mixup_alpha = 0.2;  // Beta(a, a) for mixup_standard
  std::size_t mix_width = 3;  // augmentation chains mixed by the strong policies
};

// Input-level augmentation of one batch (mixup is applied by the trainer).
Tensor augment(const AugPolicy& policy, const Tensor& x, std::mt19937_64& rng);

struct Mixed {
  Tensor x;
  Tensor y;  // soft labels
};

// x = lambda x1 + (1 - lambda) x2, y likewise; y1/y2 are one-hot rows.
Mixed mixup(const Tensor& x1, const Tensor& y1, const Tensor& x2, const Tensor& y2, double lambda);

Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes);

struct TrainConfig {
  std::size_t epochs = 20;
  std::vector<std::size_t> checkpoint_epochs;  // empty: only the last epoch
  std::size_t train_size = 1536;
  std::size_t val_size = 1024;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double label_smoothing = 0.0;
  double aux_weight = 1.0;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  std::size_t epoch = 0;
  ModelState state;
  double val_accuracy = 0.0;
  double train_loss = 0.0;  // clean training-split loss at the end of the epoch
};

struct CheckpointSequence {
  ToyModelSpec spec;
  AugPolicy policy;
  std::uint64_t seed = 0;
  std::vector<Checkpoint> checkpoints;
};

// Cross-entropy with optional label smoothing and rotation loss when the
// model has an aux head. epochs = 0 yields only the initial checkpoint.
CheckpointSequence train_base(const streams::DatasetAdapter& task, const ToyModelSpec& spec, const AugPolicy& policy,
                              const TrainConfig& cfg);

// Loss used by train_base: smoothed cross-entropy, equal to plain CE at eps = 0.
double smoothed_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels, double eps,
                              Tensor* dlogits = nullptr);

// Fraction of correct predictions under running statistics.
double accuracy(AdaptiveModel& model, const streams::LabeledSet& data);

struct FinetuneConfig {
  std::size_t samples = 1024;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

// Retrains only the classifier on data drawn with the given label
// proportions. EmptyClass if a positive proportion has no data.
void finetune_classifier(AdaptiveModel& model, const streams::DatasetAdapter& task,
                         const std::vector<double>& label_distribution, const FinetuneConfig& cfg);

// Directory layout: epoch_<n>.tta state files plus manifest.txt with one
// `key = value` block per checkpoint.
void save_checkpoints(const std::filesystem::path& dir, const CheckpointSequence& seq);
CheckpointSequence load_checkpoints(const std::filesystem::path& dir);

}  // namespace tta::pretrain
