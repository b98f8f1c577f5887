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

#include "tta/harness/evaluate.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "tta/core/error.hpp"
#include "tta/core/math.hpp"
#include "tta/methods/registry.hpp"
#include "tta/streams/stream.hpp"

namespace tta::harness {

double record_error(const selection::RunRecord& r, const std::vector<std::string>& slot_domains, bool domain_uniform) {
  if (!domain_uniform) return selection::stream_error_percent(r.batches);
  std::map<std::string, std::pair<double, double>> per;  // domain -> (correct, seen)
  for (const auto& b : r.batches) {
    const std::string domain = b.slot_id < slot_domains.size() ? slot_domains[b.slot_id] : std::to_string(b.slot_id);
    per[domain].first += b.accuracy * static_cast<double>(b.size);
    per[domain].second += static_cast<double>(b.size);
  }
  if (per.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [_, v] : per) total += v.second > 0.0 ? 100.0 * (1.0 - v.first / v.second) : 0.0;
  return total / static_cast<double>(per.size());
}

std::vector<SummaryRow> summarize(const std::vector<selection::RunRecord>& records,
                                  const std::vector<std::string>& slot_domains, bool domain_uniform) {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<double>> errors;
  for (const auto& r : records) {
    std::size_t i = 0;
    while (i < rows.size() && !(rows[i].method == r.method && rows[i].protocol == r.protocol)) ++i;
    if (i == rows.size()) {
      rows.push_back({r.method, r.protocol});
      errors.emplace_back();
    }
    errors[i].push_back(record_error(r, slot_domains, domain_uniform));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& e = errors[i];
    double mean = 0.0;
    for (double v : e) mean += v / static_cast<double>(e.size());
    double ss = 0.0;
    for (double v : e) ss += (v - mean) * (v - mean);
    rows[i].mean_error = mean;
    rows[i].std_error = e.size() > 1 ? std::sqrt(ss / static_cast<double>(e.size() - 1)) : 0.0;
    rows[i].runs = e.size();
  }
  return rows;
}

void parallel_for(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& task) {
  threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (threads == 1) {
    for (std::size_t i = 0; i < jobs; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::vector<MethodEntry> method_list(const ExperimentConfig& cfg) {
  std::vector<MethodEntry> out;
  bool has_baseline = false;
  for (const auto& m : cfg.methods) has_baseline = has_baseline || m.name == "no_adapt";
  if (cfg.include_baseline && !has_baseline) out.push_back({"no_adapt", {}});
  out.insert(out.end(), cfg.methods.begin(), cfg.methods.end());
  return out;
}

// A method's own "lr" wins over the experiment-wide learning rate.
double learning_rate_for(const MethodEntry& m, double fallback) {
  const auto it = m.hyperparameters.find("lr");
  return it == m.hyperparameters.end() ? fallback : it->second;
}

Tensor calibration_inputs(const ExperimentConfig& cfg, const Scenario& scenario) {
  return streams::sample_split(*scenario.source, 256, mix_seed(cfg.train.seed, 0x6669736865))
      .inputs;
}

}  // namespace

Evaluation evaluate(const ExperimentConfig& cfg, const Scenario& scenario, const AdaptiveModel& source,
                    double source_val_accuracy) {
  const auto methods_run = method_list(cfg);
  if (methods_run.empty()) throw Error(ErrorCode::kConfigInvalid, "no methods to run");

  std::vector<std::vector<streams::TestBatch>> streams_by_seed;
  std::vector<std::string> hashes;
  for (std::uint64_t seed : cfg.seeds) {
    const auto spec = scenario.stream_for(seed);
    streams_by_seed.push_back(streams::materialize_stream(spec, *scenario.target));
    hashes.push_back(streams::stream_spec_hash(spec));
  }
  const Tensor calibration = calibration_inputs(cfg, scenario);

  const std::size_t n_protocols = cfg.protocols.size(), n_seeds = cfg.seeds.size();
  Evaluation ev;
  ev.scenario = scenario.name;
  ev.source_val_accuracy = source_val_accuracy;
  ev.annotations = scenario.annotations;
  ev.records.resize(methods_run.size() * n_protocols * n_seeds);
  parallel_for(ev.records.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t s = job % n_seeds;
    const std::size_t p = (job / n_seeds) % n_protocols;
    const MethodEntry& m = methods_run[job / (n_seeds * n_protocols)];
    AdaptiveModel model = source;
    auto strategy = methods::make_strategy(m.name, m.hyperparameters);
    selection::ProtocolConfig pc;
    pc.mode = cfg.protocols[p];
    pc.max_steps = cfg.max_steps;
    pc.learning_rate = learning_rate_for(m, cfg.learning_rate);
    pc.record_runtime = cfg.record_runtime;
    pc.calibration = calibration;
    selection::RunRecord rec = selection::run_protocol(model, *strategy, streams_by_seed[s], pc, cfg.seeds[s]);
    rec.scenario = scenario.name;
    rec.stream_id = hashes[s];
    ev.records[job] = std::move(rec);
  });
  ev.summary = summarize(ev.records, scenario.slot_domains, cfg.domain_uniform);
  return ev;
}

Evaluation evaluate(const ExperimentConfig& cfg) {
  const Scenario scenario = build_scenario(cfg);
  const auto seq = obtain_checkpoints(cfg, scenario);
  const AdaptiveModel source = source_model(seq, cfg.checkpoint_index);
  return evaluate(cfg, scenario, source, pick_checkpoint(seq, cfg.checkpoint_index).val_accuracy);
}

std::vector<Evaluation> evaluate_suite(const ExperimentConfig& cfg) {
  if (cfg.scenario != "suite") return {evaluate(cfg)};
  std::vector<Evaluation> out;
  for (const auto& name : scenario_names()) {
    ExperimentConfig one = cfg;
    one.scenario = name;
    out.push_back(evaluate(one));
  }
  return out;
}

std::vector<SweepResult> sweep(const ExperimentConfig& cfg, const Scenario& scenario, const AdaptiveModel& source) {
  std::vector<MethodEntry> to_sweep;
  for (const auto& m : cfg.methods)
    if (m.name != "no_adapt") to_sweep.push_back(m);
  if (to_sweep.empty()) throw Error(ErrorCode::kConfigInvalid, "sweep needs at least one adapting method");
  const auto grid = cfg.grid.empty() ? selection::default_grid() : cfg.grid;
  selection::ProtocolConfig base;
  base.mode = cfg.protocols.front();
  base.record_runtime = cfg.record_runtime;
  base.calibration = calibration_inputs(cfg, scenario);

  std::vector<SweepResult> out;
  for (const auto& m : to_sweep) {
    for (std::uint64_t seed : cfg.seeds) {
      const auto spec = scenario.stream_for(seed);
      const auto batches = streams::materialize_stream(spec, *scenario.target);
      SweepResult r;
      r.method = m.name;
      r.protocol = std::string(selection::to_string(base.mode));
      r.seed = seed;
      r.stream_hash = streams::stream_spec_hash(spec);
      r.grid = selection::grid_search(
          source, [&] { return methods::make_strategy(m.name, m.hyperparameters); }, [&] { return batches; }, grid,
          base, seed, cfg.threads);
      for (auto& row : r.grid.rows) {
        row.record.scenario = scenario.name;
        row.record.stream_id = r.stream_hash;
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::string summary_table(const Evaluation& e) {
  std::string out = "scenario: " + e.scenario + "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "source validation accuracy: %.1f%%\n\n", 100.0 * e.source_val_accuracy);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-14s %-16s %16s %5s\n", "method", "protocol", "error % (mean±std)", "runs");
  out += buf;
  for (const auto& r : e.summary) {
    std::snprintf(buf, sizeof buf, "%-14s %-16s %9.2f ± %5.2f %5zu\n", r.method.c_str(), r.protocol.c_str(), r.mean_error,
                  r.std_error, r.runs);
    out += buf;
  }
  if (!e.annotations.empty()) {
    out += "\nfull-scale reference values (not comparable to toy numbers):\n";
    for (const auto& a : e.annotations) {
      std::snprintf(buf, sizeof buf, "  %-44s %6.1f\n", a.label.c_str(), a.value);
      out += buf;
    }
  }
  return out;
}

}  // namespace tta::harness
