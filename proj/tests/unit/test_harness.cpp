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

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tta/core/error.hpp"
#include "tta/harness/config.hpp"
#include "tta/harness/evaluate.hpp"
#include "tta/harness/records.hpp"
#include "tta/harness/report.hpp"
#include "tta/harness/scenario.hpp"

using namespace tta;
using namespace tta::harness;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no tta::Error thrown");
  return ErrorCode::kIoError;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tta_harness_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small and fast: narrow model, short training, short streams.
ExperimentConfig small_config() {
  ExperimentConfig c = config_from_overrides({
      "methods=[\"tent\"]",
      "seeds=[2022,2023]",
      "max_steps=3",
      "model.width=16",
      "pretrain.epochs=4",
      "pretrain.train_size=512",
      "stream.trials=128",
      "stream.corruptions=[\"gaussian_noise\",\"blur\"]",
  });
  return c;
}

selection::RunRecord synthetic_record(const std::vector<double>& accuracies, std::size_t size = 10) {
  selection::RunRecord r;
  r.method = "tent";
  r.protocol = "online_last";
  r.seed = 1;
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    selection::BatchEntry b;
    b.batch_index = i;
    b.size = size;
    b.accuracy = accuracies[i];
    r.batches.push_back(b);
  }
  r.stream_error = selection::stream_error_percent(r.batches);
  return r;
}

}  // namespace

TEST_CASE("config defaults round-trip and reject unknown keys") {
  const ExperimentConfig d;
  const json j = to_json(d);
  CHECK(to_json(config_from_json(j)) == j);
  CHECK(d.seeds == std::vector<std::uint64_t>{2022, 2023, 2024});
  CHECK(d.domain_uniform);
  CHECK(code_of([] { config_from_json(json{{"bogus", 1}}); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { config_from_json(json{{"stream", {{"sevrity", 2}}}}); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { config_from_json(json{{"methods", {"nonexistent"}}}); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] {
          config_from_json(json{{"methods", {{{"name", "tent"}, {"hyperparameters", {{"nope", 1}}}}}}});
        }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { config_from_json(json{{"protocols", {"sometimes"}}}); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { config_from_json(json{{"scenario", "imagenet"}}); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { config_from_json(json{{"max_steps", 0}}); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { config_from_json(json{{"seeds", json::array()}}); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { config_from_json(json{{"learning_rate", "fast"}}); }) == ErrorCode::kConfigInvalid);
}

TEST_CASE("overrides address nested keys") {
  const ExperimentConfig c = config_from_overrides({"stream.severity=5", "name=my run", "methods=[\"tent\",\"shot\"]",
                                                    "protocols=[\"online_last\"]", "task.seed=9"});
  CHECK(c.stream.severity == 5);
  CHECK(c.name == "my run");
  REQUIRE(c.methods.size() == 2);
  CHECK(c.methods[1].name == "shot");
  CHECK(c.protocols == std::vector<selection::ProtocolMode>{selection::ProtocolMode::kOnlineLast});
  CHECK(c.task.seed == 9);
  CHECK(code_of([] { config_from_overrides({"noequals"}); }) == ErrorCode::kConfigInvalid);

  const auto dir = scratch("config");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "c.json");
    out << R"({"scenario": "label_shift", "stream": {"alpha": 0.1}, "methods": [{"name": "tent", "hyperparameters": {"lr": 0.01}}]})";
  }
  const ExperimentConfig f = load_config((dir / "c.json").string(), {"stream.alpha=10"});
  CHECK(f.scenario == "label_shift");
  CHECK(f.stream.alpha == 10.0);
  CHECK(f.methods.at(0).hyperparameters.at("lr") == 0.01);
  CHECK(code_of([&] { load_config((dir / "missing.json").string()); }) == ErrorCode::kConfigInvalid);
  std::filesystem::remove_all(dir);
}

TEST_CASE("every scenario builds a valid stream with reference annotations") {
  for (const auto& name : scenario_names()) {
    CAPTURE(name);
    ExperimentConfig c = config_from_overrides({"scenario=" + name, "stream.trials=128", "stream.slots=4"});
    const Scenario s = build_scenario(c);
    CHECK(s.name == name);
    CHECK(!s.annotations.empty());
    CHECK(s.slot_domains.size() == s.stream.slots.size());
    const auto batches = streams::materialize_stream(s.stream_for(3), *s.target);
    CHECK(!batches.empty());
  }
  auto value_of = [](const Scenario& s, const std::string& label) {
    for (const auto& a : s.annotations)
      if (a.label == label) return a.value;
    return -1.0;
  };
  const Scenario common = build_scenario(ExperimentConfig{});
  CHECK(value_of(common, "CIFAR10-C baseline error") == 44.3);
  CHECK(value_of(common, "CIFAR10-C BN_Adapt error") == 27.5);
  const Scenario label = build_scenario(config_from_overrides({"scenario=label_shift"}));
  CHECK(value_of(label, "CIFAR10 alpha=0.01 baseline error") == 7.8);
  CHECK(value_of(label, "CIFAR10 alpha=0.01 BN_Adapt error") == 77.8);
  const Scenario spurious = build_scenario(config_from_overrides({"scenario=spurious"}));
  CHECK(spurious.source != spurious.target);
}

TEST_CASE("missing checkpoints are reported") {
  ExperimentConfig c = small_config();
  c.checkpoint_dir = scratch("nockpt").string();
  CHECK(code_of([&] { evaluate(c); }) == ErrorCode::kMissingCheckpoint);
  c.checkpoint_dir.clear();
  c.checkpoint_index = 5;
  CHECK(code_of([&] { evaluate(c); }) == ErrorCode::kMissingCheckpoint);
}

TEST_CASE("evaluate: one record per (method, protocol, seed) with a baseline") {
  const ExperimentConfig c = small_config();
  const Evaluation ev = evaluate(c);
  REQUIRE(ev.records.size() == 2 * 2 * 2);
  CHECK(ev.records[0].method == "no_adapt");
  CHECK(ev.records.back().method == "tent");
  REQUIRE(ev.summary.size() == 4);
  const Scenario s = build_scenario(c);
  for (const auto& r : ev.records) {
    CHECK(r.scenario == "common_shifts");
    CHECK(!r.stream_id.empty());
    // error accounting from the per-batch entries
    double correct = 0.0, seen = 0.0;
    for (const auto& b : r.batches) {
      correct += b.accuracy * static_cast<double>(b.size);
      seen += static_cast<double>(b.size);
    }
    CHECK(std::abs(r.stream_error - 100.0 * (1.0 - correct / seen)) <= 1e-9);
  }
  for (const auto& row : ev.summary) {
    std::vector<double> e;
    for (const auto& r : ev.records)
      if (r.method == row.method && r.protocol == row.protocol) e.push_back(record_error(r, s.slot_domains, true));
    REQUIRE(e.size() == 2);
    CHECK(row.runs == 2);
    CHECK(row.mean_error == doctest::Approx((e[0] + e[1]) / 2));
    CHECK(row.std_error == doctest::Approx(std::abs(e[0] - e[1]) / std::sqrt(2.0)));
  }
  // no-adapt is identical under every protocol
  CHECK(ev.records[0].stream_error == ev.records[2].stream_error);
  CHECK(summary_table(ev).find("44.3") != std::string::npos);
}

TEST_CASE("domain-uniform and sample-weighted averages") {
  selection::RunRecord r;
  // slot 0: 3 batches of 10 at accuracy 1; slot 1: 1 batch of 10 at accuracy 0.5
  for (std::size_t i = 0; i < 4; ++i) {
    selection::BatchEntry b;
    b.batch_index = i;
    b.slot_id = i < 3 ? 0 : 1;
    b.size = 10;
    b.accuracy = i < 3 ? 1.0 : 0.5;
    r.batches.push_back(b);
  }
  const std::vector<std::string> domains = {"a", "b"};
  CHECK(record_error(r, domains, false) == doctest::Approx(100.0 * 5.0 / 40.0));
  CHECK(record_error(r, domains, true) == doctest::Approx((0.0 + 50.0) / 2));
  // slots sharing a domain label pool together
  CHECK(record_error(r, {"a", "a"}, true) == doctest::Approx(12.5));
}

TEST_CASE("threaded evaluation equals serial and is reproducible") {
  ExperimentConfig c = small_config();
  const Evaluation a = evaluate(c);
  c.threads = 3;
  const Evaluation b = evaluate(c);
  CHECK(a.records == b.records);
  const auto dir = scratch("determinism");
  persist_records(dir / "a.jsonl", a.records);
  persist_records(dir / "b.jsonl", b.records);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("baseline on an unshifted stream matches source validation error") {
  ExperimentConfig c = config_from_overrides({"methods=[]", "seeds=[5]", "protocols=[\"online_last\"]",
                                              "stream.corruptions=[\"gaussian_noise\"]", "stream.severity=0",
                                              "stream.trials=4096", "model.width=16", "pretrain.epochs=6"});
  const Evaluation ev = evaluate(c);
  REQUIRE(ev.records.size() == 1);
  CHECK(std::abs(ev.records[0].stream_error - 100.0 * (1.0 - ev.source_val_accuracy)) <= 2.0);
}

TEST_CASE("records persist and load exactly") {
  const Evaluation ev = evaluate(small_config());
  const auto dir = scratch("records");
  persist_records(dir / "r.jsonl", ev.records);
  CHECK(load_records(dir / "r.jsonl") == ev.records);

  // future schema version
  {
    json j = record_to_json(ev.records[0]);
    j["schema_version"] = kSchemaVersion + 1;
    std::ofstream out(dir / "future.jsonl");
    out << j.dump() << '\n';
  }
  CHECK(code_of([&] { load_records(dir / "future.jsonl"); }) == ErrorCode::kSchemaVersionMismatch);

  // damaged third line
  {
    std::ofstream out(dir / "bad.jsonl");
    out << record_to_json(ev.records[0]).dump() << '\n' << record_to_json(ev.records[1]).dump() << "\n{\"schema_ver\n";
  }
  try {
    load_records(dir / "bad.jsonl");
    FAIL("expected CorruptRecord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptRecord);
    CHECK(std::string(e.what()).find("bad.jsonl:3") != std::string::npos);
  }
  {
    json j = record_to_json(ev.records[0]);
    j.erase("batches");
    std::ofstream out(dir / "short.jsonl");
    out << j.dump() << '\n';
  }
  CHECK(code_of([&] { load_records(dir / "short.jsonl"); }) == ErrorCode::kCorruptRecord);
  CHECK(code_of([&] { load_records(dir / "absent.jsonl"); }) == ErrorCode::kIoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("1000 records load in under a second") {
  std::vector<selection::RunRecord> many;
  std::vector<double> acc(50);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = 0.5 + 0.01 * static_cast<double>(i % 7);
  for (int i = 0; i < 1000; ++i) {
    many.push_back(synthetic_record(acc));
    many.back().seed = static_cast<std::uint64_t>(i);
  }
  const auto dir = scratch("many");
  persist_records(dir / "m.jsonl", many);
  const auto t0 = std::chrono::steady_clock::now();
  const auto back = load_records(dir / "m.jsonl");
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(back.size() == 1000);
  CHECK(back == many);
  CHECK(s < 1.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trace statistics") {
  const auto flat = trace_stats(synthetic_record(std::vector<double>(40, 0.7)));
  CHECK(std::abs(flat.slope) <= 1e-12);
  CHECK(std::abs(flat.gap_points) <= 1e-12);

  std::vector<double> line(100);
  for (std::size_t i = 0; i < 100; ++i) line[i] = 1.0 - static_cast<double>(i) / 99.0;
  const auto down = trace_stats(synthetic_record(line));
  // closed-form least squares on an exact line: the line's own slope
  CHECK(down.slope == doctest::Approx(-1.0 / 99.0).epsilon(1e-12));
  CHECK(down.slope == doctest::Approx(-0.0101).epsilon(1e-2));
  // quintile means: first 20 points vs last 20 points
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 20; ++i) first += line[i] / 20, last += line[80 + i] / 20;
  CHECK(down.gap_points == doctest::Approx(100.0 * (first - last)));

  const auto dir = scratch("traces");
  const std::vector<selection::RunRecord> recs = {synthetic_record(line), synthetic_record({0.5, 0.6})};
  const auto stats = trace_report(recs, dir);
  REQUIRE(stats.size() == 2);
  for (const auto& s : stats) {
    CHECK(std::filesystem::exists(s.plot));
    CHECK(slurp(s.plot).find("<polyline") != std::string::npos);
  }
  CHECK(stats[0].plot != stats[1].plot);
  CHECK(code_of([&] { trace_report({}, dir); }) == ErrorCode::kInvalidArgument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sensitivity heatmap") {
  const auto dir = scratch("heatmap");
  std::vector<GridTableRow> one = {{"tent", "online_last", 1e-3, 5, 1, "h", 12.5, 0.0}};
  const Heatmap h1 = sensitivity_heatmap(one, dir / "one.svg");
  REQUIRE(h1.error.size() == 1);
  CHECK(h1.error[0][0] == 12.5);
  CHECK(slurp(dir / "one.svg").find("12.5") != std::string::npos);

  std::vector<GridTableRow> rows;
  for (double eta : {1e-3, 1e-2})
    for (std::size_t m : {1, 2, 3}) rows.push_back({"tent", "online_last", eta, m, 1, "h", eta * 1000 + m, 0.0});
  const Heatmap h = heatmap_from_table(rows);
  for (const auto& r : rows) {
    const auto i = std::find(h.etas.begin(), h.etas.end(), r.eta) - h.etas.begin();
    const auto j = std::find(h.steps.begin(), h.steps.end(), r.steps) - h.steps.begin();
    CHECK(h.error[i][j] == r.error_percent);
  }
  rows.pop_back();
  CHECK(code_of([&] { heatmap_from_table(rows); }) == ErrorCode::kIncompleteGrid);
  CHECK(code_of([&] { heatmap_from_table({}); }) == ErrorCode::kIncompleteGrid);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep tables round-trip through CSV") {
  ExperimentConfig c = small_config();
  c.seeds = {4};
  c.protocols = {selection::ProtocolMode::kOnlineLast};
  c.grid = {{1e-3, 1}, {1e-3, 2}, {1e-2, 1}, {1e-2, 2}};
  const Scenario s = build_scenario(c);
  const auto seq = obtain_checkpoints(c, s);
  const auto results = sweep(c, s, source_model(seq, -1));
  REQUIRE(results.size() == 1);
  const auto table = grid_table(results[0].grid, results[0].stream_hash);
  REQUIRE(table.size() == 4);
  const auto dir = scratch("sweep");
  std::filesystem::create_directories(dir);
  selection::write_grid_csv((dir / "g.csv").string(), results[0].grid, results[0].stream_hash);
  const auto back = read_grid_csv(dir / "g.csv");
  REQUIRE(back.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back[i].eta == table[i].eta);
    CHECK(back[i].steps == table[i].steps);
    CHECK(back[i].error_percent == table[i].error_percent);
    CHECK(back[i].method == "tent");
  }
  const Heatmap h = sensitivity_heatmap(back, dir / "h.svg");
  CHECK(h.etas.size() == 2);
  CHECK(h.steps.size() == 2);
  std::filesystem::remove_all(dir);
}
