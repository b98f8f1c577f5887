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
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tta/core/tensor.hpp"
#include "tta/streams/dataset.hpp"

namespace tta::streams {

enum class SamplerKind { kIid, kDirichletLabel, kClassOrdered };
enum class ShiftKind { kNone, kAttributeRelationship, kAttributeValues, kLabel, kNonstationary };
// What to do when a cell's pool runs out inside a slot.
enum class ReplacementPolicy { kFallback, kStrict };

SamplerKind parse_sampler(std::string_view name);
std::string_view to_string(SamplerKind kind);
ShiftKind parse_shift_kind(std::string_view name);
std::string_view to_string(ShiftKind kind);

struct SlotSpec {
  std::vector<double> label_proportions;  // empty: adapter default
  std::optional<double> correlation;      // style-label rho override
  std::size_t trials = 0;                 // n_t
  SamplerKind sampler = SamplerKind::kIid;
  double alpha = 1.0;                     // dirichlet_label only
  std::string corruption;                 // empty: clean
  int severity = 0;
};

struct StreamSpec {
  std::vector<SlotSpec> slots;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  ShiftKind shift_kind = ShiftKind::kNone;
  ReplacementPolicy replacement = ReplacementPolicy::kFallback;

  std::size_t total_batches() const;
  // Throws InvalidArgument on an empty spec, zero batch size or a slot shorter than one batch.
  void validate() const;
};

// Labels are kept here for scoring; strategies only ever receive `inputs`.
struct TestBatch {
  Tensor inputs;
  std::vector<std::size_t> labels;
  std::size_t slot_id = 0;
  std::size_t batch_index = 0;
};

// Per-slot class proportions drawn from Dir(alpha * 1_C).
std::vector<std::vector<double>> dirichlet_label_slots(double alpha, std::size_t classes, std::size_t n_slots,
                                                       std::size_t slot_size, std::uint64_t seed);
std::vector<double> sample_dirichlet(double alpha, std::size_t classes, std::mt19937_64& rng);

// Single-consumer lazy stream. Slots are materialised one at a time.
class StreamIterator {
 public:
  StreamIterator(StreamSpec spec, const DatasetAdapter& adapter);

  std::optional<TestBatch> next();
  std::size_t total_batches() const { return spec_.total_batches(); }
  const StreamSpec& spec() const { return spec_; }

 private:
  void open_slot(std::size_t slot);
  std::size_t draw_index(std::size_t cell);

  StreamSpec spec_;
  const DatasetAdapter* adapter_;
  std::mt19937_64 rng_;
  std::size_t slot_ = 0;
  std::size_t batch_index_ = 0;
  std::size_t slot_cursor_ = 0;
  std::vector<std::size_t> slot_cells_;
  std::vector<std::size_t> slot_pool_indices_;
  // Remaining without-replacement draws per cell, reset at every slot.
  std::map<std::size_t, std::vector<std::size_t>> remaining_;
  bool warned_ = false;
};

StreamIterator build_stream(const StreamSpec& spec, const DatasetAdapter& adapter);
std::vector<TestBatch> collect(StreamIterator stream);
std::vector<TestBatch> materialize_stream(const StreamSpec& spec, const DatasetAdapter& adapter);

// Canonical key = value rendering and its FNV-1a hash (hex).
std::string describe(const StreamSpec& spec);
std::string stream_spec_hash(const StreamSpec& spec);

}  // namespace tta::streams
