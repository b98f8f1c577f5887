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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tta/selection/selection.hpp"

namespace tta::harness {

struct TraceStats {
  std::string run;          // method/protocol/seed
  double slope = 0.0;       // least-squares batch accuracy per batch index
  double gap_points = 0.0;  // 100 * (first-quintile mean - last-quintile mean)
  std::filesystem::path plot;
};

TraceStats trace_stats(const selection::RunRecord& r);

// One SVG line plot per record in `out_dir`, plus the decline statistics.
// InvalidArgument on an empty record list.
std::vector<TraceStats> trace_report(std::span<const selection::RunRecord> records, const std::filesystem::path& out_dir);

// One row of a grid results table.
struct GridTableRow {
  std::string method;
  std::string mode;
  double eta = 0.0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::string stream_spec_hash;
  double error_percent = 0.0;
  double runtime_s = 0.0;
};

std::vector<GridTableRow> grid_table(const selection::GridResult& g, const std::string& stream_spec_hash);
std::vector<GridTableRow> read_grid_csv(const std::filesystem::path& path);

struct Heatmap {
  std::vector<double> etas;          // ascending
  std::vector<std::size_t> steps;    // ascending
  std::vector<std::vector<double>> error;  // [eta][steps]; rows of several seeds are averaged
};

// IncompleteGrid unless every (eta, steps) pair is present.
Heatmap heatmap_from_table(std::span<const GridTableRow> rows);
std::string heatmap_svg(const Heatmap& h, const std::string& caption);

// Writes the heatmap SVG and returns the grid it shows.
Heatmap sensitivity_heatmap(std::span<const GridTableRow> rows, const std::filesystem::path& path,
                            const std::string& caption = {});

}  // namespace tta::harness
