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

// tta: command-line front end for pretraining, evaluation, sweeps and reports.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "tta/core/error.hpp"
#include "tta/harness/config.hpp"
#include "tta/harness/evaluate.hpp"
#include "tta/harness/records.hpp"
#include "tta/harness/report.hpp"
#include "tta/harness/scenario.hpp"
#include "tta/methods/registry.hpp"

namespace fs = std::filesystem;
using namespace tta;
using namespace tta::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::vector<std::string> set;
  std::string scenario;
  std::vector<std::string> method;
  std::vector<std::string> protocol;
  std::vector<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "experiment config (JSON)");
  cmd->add_option("--set", c.set, "override a config key, e.g. --set stream.severity=5");
  cmd->add_option("--scenario", c.scenario, "same as --set scenario=...");
  cmd->add_option("--method", c.method, "replaces the method list (repeatable)");
  cmd->add_option("--protocol", c.protocol, "replaces the protocol list (repeatable)");
  cmd->add_option("--seed", c.seed, "replaces the seed list (repeatable)");
  cmd->add_option("--threads", c.threads, "same as --set threads=...");
  cmd->add_option("-o,--out", c.out, "output directory (default: output root / output_dir / name)");
}

std::string json_list(const std::vector<std::string>& xs) {
  nlohmann::json j = xs;
  return j.dump();
}

ExperimentConfig resolve(const Common& c) {
  std::vector<std::string> overrides = c.set;
  if (!c.scenario.empty()) overrides.push_back("scenario=" + c.scenario);
  if (!c.method.empty()) overrides.push_back("methods=" + json_list(c.method));
  if (!c.protocol.empty()) overrides.push_back("protocols=" + json_list(c.protocol));
  if (!c.seed.empty()) overrides.push_back("seeds=" + nlohmann::json(c.seed).dump());
  if (c.threads > 0) overrides.push_back("threads=" + std::to_string(c.threads));
  return c.config.empty() ? config_from_overrides(overrides) : load_config(c.config, overrides);
}

fs::path output_dir(const ExperimentConfig& cfg, const std::string& explicit_out) {
  if (!explicit_out.empty()) return explicit_out;
  fs::path dir = cfg.output_dir;
  if (const char* root = std::getenv("TTA_OUTPUT_ROOT"); root && *root && dir.is_relative()) dir = fs::path(root) / dir;
  return dir / cfg.name;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  out << text;
}

int cmd_list_methods() {
  for (const auto& m : methods::method_catalog()) {
    std::printf("%-13s %s\n", m.name.c_str(), m.summary.c_str());
    std::printf("              resets model: %s, needs norm stats: %s, adjusts pretraining: %s\n",
                m.metadata.resets_model ? "yes" : "no", m.metadata.requires_norm_stats ? "yes" : "no",
                m.metadata.adjusts_pretraining ? "yes" : "no");
    for (const auto& h : m.hyperparameters)
      std::printf("                %-16s default %-10g %s\n", h.key.c_str(), h.default_value, h.description.c_str());
  }
  return 0;
}

int cmd_pretrain(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const Scenario scenario = build_scenario(cfg);
  ExperimentConfig train_cfg = cfg;
  train_cfg.checkpoint_dir.clear();
  const auto seq = obtain_checkpoints(train_cfg, scenario);
  const fs::path dir = output_dir(cfg, c.out) / "checkpoints";
  pretrain::save_checkpoints(dir, seq);
  std::printf("%-6s %-10s %-10s\n", "epoch", "val_acc", "train_loss");
  for (const auto& k : seq.checkpoints) std::printf("%-6zu %-10.4f %-10.4f\n", k.epoch, k.val_accuracy, k.train_loss);
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_run(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const auto evaluations = evaluate_suite(cfg);
  const fs::path dir = output_dir(cfg, c.out);
  std::vector<selection::RunRecord> all;
  std::string table;
  for (const auto& ev : evaluations) {
    all.insert(all.end(), ev.records.begin(), ev.records.end());
    table += summary_table(ev) + "\n";
  }
  persist_records(dir / "records.jsonl", all);
  write_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
  write_file(dir / "summary.txt", table);
  std::fputs(table.c_str(), stdout);
  std::printf("\nwrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const Scenario scenario = build_scenario(cfg);
  const auto seq = obtain_checkpoints(cfg, scenario);
  const AdaptiveModel source = source_model(seq, cfg.checkpoint_index);
  const auto results = sweep(cfg, scenario, source);
  const fs::path dir = output_dir(cfg, c.out);
  fs::create_directories(dir);
  std::map<std::string, std::vector<GridTableRow>> by_method;
  for (const auto& r : results) {
    const fs::path csv = dir / ("grid_" + r.method + "_" + std::to_string(r.seed) + ".csv");
    selection::write_grid_csv(csv.string(), r.grid, r.stream_hash);
    const auto rows = grid_table(r.grid, r.stream_hash);
    by_method[r.method].insert(by_method[r.method].end(), rows.begin(), rows.end());
    const auto& best = r.grid.best_row();
    double worst = best.error_percent;
    for (const auto& row : r.grid.rows) worst = std::max(worst, row.error_percent);
    std::printf("%-10s seed %-6llu best eta %-8g steps %-4zu error %6.2f%%  worst %6.2f%%  spread %6.2f\n",
                r.method.c_str(), static_cast<unsigned long long>(r.seed), best.cell.learning_rate, best.cell.steps,
                best.error_percent, worst, worst - best.error_percent);
  }
  for (const auto& [method, rows] : by_method)
    sensitivity_heatmap(rows, dir / ("heatmap_" + method + ".svg"), method + ", mean over seeds");
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_report(const std::vector<std::string>& records_paths, const std::vector<std::string>& grids, const std::string& out,
               bool sample_weighted) {
  if (records_paths.empty() && grids.empty()) throw Error(ErrorCode::kConfigInvalid, "report needs --records or --grid");
  const fs::path dir = out.empty() ? fs::path("report") : fs::path(out);
  for (const auto& path : records_paths) {
    const auto recs = load_records(path);
    const auto stats = trace_report(recs, dir / "traces");
    std::string csv = "run,slope,gap_points,plot\n";
    char buf[512];
    for (const auto& s : stats) {
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%s\n", s.run.c_str(), s.slope, s.gap_points, s.plot.string().c_str());
      csv += buf;
    }
    write_file(dir / "trace_stats.csv", csv);
    Evaluation ev;
    ev.scenario = recs.empty() ? "" : recs.front().scenario;
    ev.records = recs;
    ev.summary = summarize(recs, {}, !sample_weighted);
    const std::string table = summary_table(ev);
    write_file(dir / "summary.txt", table);
    std::fputs(table.c_str(), stdout);
    for (const auto& s : stats) std::printf("%-32s slope %+.5f  quintile gap %+6.2f pts\n", s.run.c_str(), s.slope, s.gap_points);
  }
  std::vector<GridTableRow> rows;
  for (const auto& g : grids) {
    const auto part = read_grid_csv(g);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (!rows.empty()) {
    const auto h = sensitivity_heatmap(rows, dir / "heatmap.svg", "error % over the grid");
    double lo = h.error[0][0], hi = lo;
    for (const auto& r : h.error)
      for (double v : r) lo = std::min(lo, v), hi = std::max(hi, v);
    std::printf("heatmap %zux%zu, error %.2f..%.2f (spread %.2f)\n", h.etas.size(), h.steps.size(), lo, hi, hi - lo);
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kUnknownMethod:
    case ErrorCode::kUnknownHyperparameter:
    case ErrorCode::kUnknownCorruption:
    case ErrorCode::kInvalidAlpha:
    case ErrorCode::kInvalidCorrelation:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"test-time adaptation benchmark"};
  app.require_subcommand(1);
  Common common;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "train a checkpoint sequence and save it");
  add_common(pretrain_cmd, common);
  auto* run_cmd = app.add_subcommand("run", "evaluate one scenario and persist run records");
  add_common(run_cmd, common);
  auto* sweep_cmd = app.add_subcommand("sweep", "grid search over (learning rate, steps)");
  add_common(sweep_cmd, common);
  auto* report_cmd = app.add_subcommand("report", "traces, heatmaps and tables from saved results");
  std::vector<std::string> records, grids;
  std::string report_out;
  bool sample_weighted = false;
  report_cmd->add_option("--records", records, "records.jsonl file (repeatable)");
  report_cmd->add_option("--grid", grids, "grid CSV file (repeatable)");
  report_cmd->add_option("-o,--out", report_out, "output directory (default ./report)");
  report_cmd->add_flag("--sample-weighted", sample_weighted, "average over samples instead of slots");
  auto* list_cmd = app.add_subcommand("list-methods", "print registered methods and hyperparameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*list_cmd) return cmd_list_methods();
    if (*pretrain_cmd) return cmd_pretrain(common);
    if (*run_cmd) return cmd_run(common);
    if (*sweep_cmd) return cmd_sweep(common);
    if (*report_cmd) return cmd_report(records, grids, report_out, sample_weighted);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
