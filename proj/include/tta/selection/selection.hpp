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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tta/core/model.hpp"
#include "tta/methods/strategy.hpp"
#include "tta/streams/stream.hpp"

namespace tta::selection {

using streams::TestBatch;

enum class ProtocolMode { kEpisodicOracle, kOnlineOracle, kEpisodicLast, kOnlineLast };

ProtocolMode parse_protocol_mode(std::string_view text);
std::string_view to_string(ProtocolMode mode);
bool is_episodic(ProtocolMode mode);
bool is_oracle(ProtocolMode mode);

struct ProtocolConfig {
  ProtocolMode mode = ProtocolMode::kEpisodicOracle;
  std::size_t max_steps = 50;
  double learning_rate = 1e-3;
  bool record_runtime = false;  // off keeps records bitwise reproducible
  // Source-like inputs for the Fisher penalty; empty means the first batch.
  Tensor calibration;

  // ConfigInvalid on M = 0 or a negative or non-finite learning rate.
  void validate() const;
};

// J: fraction of correct labels. Empty batches score 0.
double batch_accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);

// A model state together with the method state that goes with it.
struct Capture {
  ModelState state;  // aux_state holds the strategy's save_state()
};

Capture capture(const AdaptiveModel& model, const methods::Strategy& strategy);
void restore(AdaptiveModel& model, methods::Strategy& strategy, const Capture& c);

struct OracleResult {
  std::size_t selected_step = 0;
  std::vector<double> scores;  // J per candidate; index 0 is the input state
  methods::Predictions predictions;  // of the selected candidate
  Capture selected;
};

// Candidates are the input state plus the state after each of M adapt()
// calls on the batch. Leaves model and strategy at the selected candidate.
// Ties go to the smallest step.
OracleResult oracle_select(AdaptiveModel& model, methods::Strategy& strategy, const TestBatch& batch, std::size_t steps);

struct BatchEntry {
  std::size_t batch_index = 0;
  std::size_t slot_id = 0;
  std::size_t size = 0;
  double accuracy = 0.0;
  double mean_entropy = 0.0;
  double loss = 0.0;  // cross-entropy of the scored predictions against the labels
  int selected_step = -1;  // -1 for last-iterate modes

  bool operator==(const BatchEntry&) const = default;
};

struct RunRecord {
  std::string method;
  std::string protocol;
  std::string stream_id;
  std::string config_hash;
  std::string scenario;
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  std::size_t steps = 0;
  std::vector<BatchEntry> batches;
  double stream_error = 0.0;  // percent
  double runtime_s = 0.0;

  double overall_accuracy() const;
  bool operator==(const RunRecord&) const = default;
};

// Sample-weighted stream error in percent.
double stream_error_percent(std::span<const BatchEntry> batches);

// Runs a strategy over a stream from the model's current state, which is
// taken as the source state. The model is left in its final state.
RunRecord run_protocol(AdaptiveModel& model, methods::Strategy& strategy, std::span<const TestBatch> stream,
                       const ProtocolConfig& cfg, std::uint64_t seed);

struct GridCell {
  double learning_rate = 0.0;
  std::size_t steps = 1;
};

std::vector<GridCell> default_grid(bool large_scale = false);

struct GridRow {
  GridCell cell;
  double error_percent = 0.0;
  double runtime_s = 0.0;
  RunRecord record;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::size_t best = 0;  // index of the lowest error; ties go to the earlier row

  const GridRow& best_row() const { return rows.at(best); }
};

using StrategyFactory = std::function<std::unique_ptr<methods::Strategy>()>;
using StreamFactory = std::function<std::vector<TestBatch>()>;

// Every cell runs independently from `source`. `threads` > 1 runs cells in parallel.
GridResult grid_search(const AdaptiveModel& source, const StrategyFactory& strategy, const StreamFactory& stream,
                       std::span<const GridCell> grid, const ProtocolConfig& base, std::uint64_t seed,
                       std::size_t threads = 1);

// Columns: method, mode, eta, steps, seed, stream_spec_hash, error_percent, runtime_s.
std::string grid_csv(const GridResult& result, const std::string& stream_spec_hash);
void write_grid_csv(const std::string& path, const GridResult& result, const std::string& stream_spec_hash);

}  // namespace tta::selection
