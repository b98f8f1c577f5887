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

#include "tta/selection/selection.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "tta/core/error.hpp"
#include "tta/core/math.hpp"

namespace tta::selection {

using methods::Predictions;
using methods::Strategy;

ProtocolMode parse_protocol_mode(std::string_view text) {
  if (text == "episodic_oracle") return ProtocolMode::kEpisodicOracle;
  if (text == "online_oracle") return ProtocolMode::kOnlineOracle;
  if (text == "episodic_last") return ProtocolMode::kEpisodicLast;
  if (text == "online_last") return ProtocolMode::kOnlineLast;
  throw Error(ErrorCode::kConfigInvalid, "unknown protocol mode '" + std::string(text) + "'");
}

std::string_view to_string(ProtocolMode mode) {
  switch (mode) {
    case ProtocolMode::kEpisodicOracle: return "episodic_oracle";
    case ProtocolMode::kOnlineOracle: return "online_oracle";
    case ProtocolMode::kEpisodicLast: return "episodic_last";
    case ProtocolMode::kOnlineLast: return "online_last";
  }
  return "?";
}

bool is_episodic(ProtocolMode mode) {
  return mode == ProtocolMode::kEpisodicOracle || mode == ProtocolMode::kEpisodicLast;
}

bool is_oracle(ProtocolMode mode) {
  return mode == ProtocolMode::kEpisodicOracle || mode == ProtocolMode::kOnlineOracle;
}

void ProtocolConfig::validate() const {
  if (max_steps == 0) throw Error(ErrorCode::kConfigInvalid, "max_steps must be at least 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw Error(ErrorCode::kConfigInvalid, "learning_rate must be finite and nonnegative");
  }
}

double batch_accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
  if (predicted.size() != labels.size()) throw Error(ErrorCode::kShapeMismatch, "prediction/label count mismatch");
  if (labels.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += predicted[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

Capture capture(const AdaptiveModel& model, const Strategy& strategy) {
  Capture c{model.snapshot()};
  c.state.aux_state = strategy.save_state();
  return c;
}

void restore(AdaptiveModel& model, Strategy& strategy, const Capture& c) {
  model.restore(c.state);
  strategy.load_state(c.state.aux_state);
}

OracleResult oracle_select(AdaptiveModel& model, Strategy& strategy, const TestBatch& batch, std::size_t steps) {
  OracleResult r;
  r.selected = capture(model, strategy);
  r.predictions = strategy.predict(model, batch.inputs);
  r.scores.push_back(batch_accuracy(r.predictions.labels, batch.labels));
  double best = r.scores.front();
  for (std::size_t m = 1; m <= steps; ++m) {
    strategy.adapt(model, batch.inputs, {m - 1});
    Predictions p = strategy.predict(model, batch.inputs);
    const double j = batch_accuracy(p.labels, batch.labels);
    r.scores.push_back(j);
    if (j > best) {
      best = j;
      r.selected_step = m;
      r.predictions = std::move(p);
      r.selected = capture(model, strategy);
    }
  }
  if (r.selected_step != steps) restore(model, strategy, r.selected);
  return r;
}

double RunRecord::overall_accuracy() const {
  double correct = 0.0, total = 0.0;
  for (const auto& b : batches) {
    correct += b.accuracy * static_cast<double>(b.size);
    total += static_cast<double>(b.size);
  }
  return total > 0.0 ? correct / total : 0.0;
}

double stream_error_percent(std::span<const BatchEntry> batches) {
  double correct = 0.0, total = 0.0;
  for (const auto& b : batches) {
    correct += b.accuracy * static_cast<double>(b.size);
    total += static_cast<double>(b.size);
  }
  return total > 0.0 ? 100.0 * (1.0 - correct / total) : 0.0;
}

namespace {

std::string fnv_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

BatchEntry score(const TestBatch& batch, const Predictions& p) {
  BatchEntry e;
  e.batch_index = batch.batch_index;
  e.slot_id = batch.slot_id;
  e.size = batch.labels.size();
  e.accuracy = batch_accuracy(p.labels, batch.labels);
  const double n = static_cast<double>(std::max<std::size_t>(1, e.size));
  for (std::size_t i = 0; i < e.size; ++i) {
    const auto row = p.probabilities.row(i);
    double h = 0.0;
    for (double q : row)
      if (q > 0.0) h -= q * std::log(q);
    e.mean_entropy += h / n;
    e.loss -= std::log(std::max(row[batch.labels[i]], kProbFloor)) / n;
  }
  return e;
}

}  // namespace

RunRecord run_protocol(AdaptiveModel& model, Strategy& strategy, std::span<const TestBatch> stream,
                       const ProtocolConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.method = strategy.name();
  rec.protocol = std::string(to_string(cfg.mode));
  rec.seed = seed;
  rec.learning_rate = cfg.learning_rate;
  rec.steps = cfg.max_steps;
  {
    std::string key = rec.method + "|" + rec.protocol + "|" + num(cfg.learning_rate) + "|" +
                      std::to_string(cfg.max_steps) + "|" + std::to_string(seed);
    for (const auto& [k, v] : strategy.hyperparameters()) key += "|" + k + "=" + num(v);
    rec.config_hash = fnv_hex(key);
  }

  strategy.set_learning_rate(cfg.learning_rate);
  strategy.reseed(seed);
  strategy.initialize(model);
  if (cfg.calibration.batch() > 0 && strategy.hyperparameter_or("fisher_lambda", 0.0) > 0.0) {
    if (auto* g = dynamic_cast<methods::GradientStrategy*>(&strategy)) g->calibrate(model, cfg.calibration);
  }
  const bool episodic = is_episodic(cfg.mode);
  const bool oracle = is_oracle(cfg.mode);
  const Capture initial = capture(model, strategy);

  for (const TestBatch& batch : stream) {
    if (episodic) restore(model, strategy, initial);
    strategy.reseed(mix_seed(seed, batch.batch_index));
    if (oracle) {
      OracleResult r = oracle_select(model, strategy, batch, cfg.max_steps);
      BatchEntry e = score(batch, r.predictions);
      e.selected_step = static_cast<int>(r.selected_step);
      rec.batches.push_back(e);
    } else {
      Predictions p;
      for (std::size_t m = 0; m < cfg.max_steps; ++m) p = strategy.adapt(model, batch.inputs, {m});
      rec.batches.push_back(score(batch, p));
    }
  }
  rec.stream_error = stream_error_percent(rec.batches);
  if (cfg.record_runtime) {
    rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

std::vector<GridCell> default_grid(bool large_scale) {
  std::vector<GridCell> out;
  for (double eta : {1e-4, 5e-4, 1e-3, 5e-3, 1e-2})
    for (std::size_t m : {1, 2, 3, 5, 10, 25, 50})
      if (!large_scale || m <= 25) out.push_back({eta, m});
  return out;
}

GridResult grid_search(const AdaptiveModel& source, const StrategyFactory& strategy, const StreamFactory& stream,
                       std::span<const GridCell> grid, const ProtocolConfig& base, std::uint64_t seed,
                       std::size_t threads) {
  if (grid.empty()) throw Error(ErrorCode::kConfigInvalid, "grid is empty");
  GridResult result;
  result.rows.resize(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        AdaptiveModel model = source;
        auto s = strategy();
        ProtocolConfig cfg = base;
        cfg.learning_rate = grid[i].learning_rate;
        cfg.max_steps = grid[i].steps;
        const auto batches = stream();
        GridRow row;
        row.cell = grid[i];
        row.record = run_protocol(model, *s, batches, cfg, seed);
        row.error_percent = row.record.stream_error;
        if (base.record_runtime) {
          row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        result.rows[i] = std::move(row);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(threads, 1, grid.size());
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  for (std::size_t i = 1; i < result.rows.size(); ++i)
    if (result.rows[i].error_percent < result.rows[result.best].error_percent) result.best = i;
  return result;
}

std::string grid_csv(const GridResult& result, const std::string& stream_spec_hash) {
  std::ostringstream out;
  out << "method,mode,eta,steps,seed,stream_spec_hash,error_percent,runtime_s\n";
  for (const auto& row : result.rows) {
    out << row.record.method << ',' << row.record.protocol << ',' << num(row.cell.learning_rate) << ','
        << row.cell.steps << ',' << row.record.seed << ',' << stream_spec_hash << ',' << num(row.error_percent) << ','
        << num(row.runtime_s) << '\n';
  }
  return out.str();
}

void write_grid_csv(const std::string& path, const GridResult& result, const std::string& stream_spec_hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path);
  f << grid_csv(result, stream_spec_hash);
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

}  // namespace tta::selection
