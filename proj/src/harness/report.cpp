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

#include "tta/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "tta/core/error.hpp"

namespace tta::harness {

namespace {

std::string num(double v, const char* fmt = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
}

std::string trace_svg(const selection::RunRecord& r, const TraceStats& s) {
  const double w = 640, h = 320, left = 50, right = 20, top = 30, bottom = 40;
  const double pw = w - left - right, ph = h - top - bottom;
  const std::size_t n = r.batches.size();
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\" font-family=\"sans-serif\">" << escape(s.run)
      << "  slope " << num(s.slope) << "  quintile gap " << num(s.gap_points, "%.2f") << " pts</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    const double y = top + ph * (1.0 - tick);
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << tick
        << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">batch index</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    const double x = left + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : pw / 2);
    const double y = top + ph * (1.0 - r.batches[i].accuracy);
    svg << num(x, "%.2f") << ',' << num(y, "%.2f") << ' ';
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

}  // namespace

TraceStats trace_stats(const selection::RunRecord& r) {
  TraceStats s;
  s.run = r.method + "/" + r.protocol + "/" + std::to_string(r.seed);
  const std::size_t n = r.batches.size();
  if (n == 0) return s;
  double mx = 0.0, my = 0.0;
  for (const auto& b : r.batches) {
    mx += static_cast<double>(b.batch_index) / static_cast<double>(n);
    my += b.accuracy / static_cast<double>(n);
  }
  double sxy = 0.0, sxx = 0.0;
  for (const auto& b : r.batches) {
    const double dx = static_cast<double>(b.batch_index) - mx;
    sxy += dx * (b.accuracy - my);
    sxx += dx * dx;
  }
  s.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const std::size_t q = std::max<std::size_t>(1, n / 5);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    first += r.batches[i].accuracy / static_cast<double>(q);
    last += r.batches[n - q + i].accuracy / static_cast<double>(q);
  }
  s.gap_points = 100.0 * (first - last);
  return s;
}

std::vector<TraceStats> trace_report(std::span<const selection::RunRecord> records, const std::filesystem::path& out_dir) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "no records to report");
  std::vector<TraceStats> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    TraceStats s = trace_stats(records[i]);
    const auto& r = records[i];
    s.plot = out_dir / (num(static_cast<double>(i), "%03.0f") + "_" +
                        safe_name(r.scenario + "_" + r.method + "_" + r.protocol + "_" + std::to_string(r.seed)) +
                        ".svg");
    write_text(s.plot, trace_svg(r, s));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<GridTableRow> grid_table(const selection::GridResult& g, const std::string& stream_spec_hash) {
  std::vector<GridTableRow> out;
  for (const auto& row : g.rows)
    out.push_back({row.record.method, row.record.protocol, row.cell.learning_rate, row.cell.steps, row.record.seed,
                   stream_spec_hash, row.error_percent, row.runtime_s});
  return out;
}

std::vector<GridTableRow> read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("method,mode,eta,steps", 0) != 0) throw Error(ErrorCode::kCorruptRecord, path.string() + ": bad header");
  std::vector<GridTableRow> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw Error(ErrorCode::kCorruptRecord, path.string() + ":" + std::to_string(number));
    try {
      out.push_back({f[0], f[1], std::stod(f[2]), std::stoul(f[3]), std::stoull(f[4]), f[5], std::stod(f[6]),
                     std::stod(f[7])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kCorruptRecord, path.string() + ":" + std::to_string(number));
    }
  }
  return out;
}

Heatmap heatmap_from_table(std::span<const GridTableRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::kIncompleteGrid, "empty grid table");
  std::map<std::pair<double, std::size_t>, std::pair<double, std::size_t>> cells;
  Heatmap h;
  for (const auto& r : rows) {
    auto& c = cells[{r.eta, r.steps}];
    c.first += r.error_percent;
    c.second += 1;
    h.etas.push_back(r.eta);
    h.steps.push_back(r.steps);
  }
  std::sort(h.etas.begin(), h.etas.end());
  h.etas.erase(std::unique(h.etas.begin(), h.etas.end()), h.etas.end());
  std::sort(h.steps.begin(), h.steps.end());
  h.steps.erase(std::unique(h.steps.begin(), h.steps.end()), h.steps.end());
  h.error.assign(h.etas.size(), std::vector<double>(h.steps.size(), 0.0));
  for (std::size_t i = 0; i < h.etas.size(); ++i) {
    for (std::size_t j = 0; j < h.steps.size(); ++j) {
      const auto it = cells.find({h.etas[i], h.steps[j]});
      if (it == cells.end())
        throw Error(ErrorCode::kIncompleteGrid,
                    "missing cell eta=" + num(h.etas[i]) + " steps=" + std::to_string(h.steps[j]));
      h.error[i][j] = it->second.first / static_cast<double>(it->second.second);
    }
  }
  return h;
}

std::string heatmap_svg(const Heatmap& h, const std::string& caption) {
  const double cell = 56, left = 80, top = 40;
  const double w = left + cell * static_cast<double>(h.steps.size()) + 20;
  const double hgt = top + cell * static_cast<double>(h.etas.size()) + 70;
  double lo = h.error[0][0], hi = lo;
  for (const auto& row : h.error)
    for (double v : row) lo = std::min(lo, v), hi = std::max(hi, v);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << hgt << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\" font-family=\"sans-serif\">error % over (eta, steps)</text>\n";
  for (std::size_t i = 0; i < h.etas.size(); ++i) {
    const double y = top + cell * static_cast<double>(i);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
        << num(h.etas[i]) << "</text>\n";
    for (std::size_t j = 0; j < h.steps.size(); ++j) {
      const double x = left + cell * static_cast<double>(j);
      const double t = hi > lo ? (h.error[i][j] - lo) / (hi - lo) : 0.0;
      const int g = static_cast<int>(std::lround(235.0 * (1.0 - t)));
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(240,"
          << g << ',' << g << ")\" stroke=\"white\"/>\n"
          << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" font-size=\"11\" text-anchor=\"middle\">" << num(h.error[i][j], "%.1f") << "</text>\n";
    }
  }
  const double base = top + cell * static_cast<double>(h.etas.size());
  for (std::size_t j = 0; j < h.steps.size(); ++j)
    svg << "<text x=\"" << left + cell * (static_cast<double>(j) + 0.5) << "\" y=\"" << base + 16
        << "\" font-size=\"11\" text-anchor=\"middle\">" << h.steps[j] << "</text>\n";
  svg << "<text x=\"" << left << "\" y=\"" << base + 34 << "\" font-size=\"11\">rows: eta, columns: steps</text>\n";
  if (!caption.empty())
    svg << "<text x=\"" << left << "\" y=\"" << base + 54 << "\" font-size=\"11\">" << escape(caption) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

Heatmap sensitivity_heatmap(std::span<const GridTableRow> rows, const std::filesystem::path& path,
                            const std::string& caption) {
  Heatmap h = heatmap_from_table(rows);
  write_text(path, heatmap_svg(h, caption));
  return h;
}

}  // namespace tta::harness
