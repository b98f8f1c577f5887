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

#include <algorithm>
#include <cmath>

#include "test_models.hpp"
#include "tta/core/error.hpp"
#include "tta/core/math.hpp"
#include "tta/methods/methods.hpp"
#include "tta/methods/registry.hpp"
#include "tta/selection/selection.hpp"
#include "tta/streams/dataset.hpp"

using namespace tta;
using namespace tta::selection;
using tta::testing::tiny_mlp;

namespace {

streams::SyntheticTask toy_task() {
  streams::SyntheticTaskConfig c;
  c.classes = 3;
  c.input = {2, 4};
  c.pool_per_cell = 512;
  c.seed = 11;
  return streams::SyntheticTask(c);
}

std::vector<TestBatch> toy_stream(std::uint64_t seed = 5, std::size_t batches = 6, std::size_t b = 16) {
  static const streams::SyntheticTask task = toy_task();
  streams::StreamSpec spec;
  streams::SlotSpec slot;
  slot.trials = batches * b;
  slot.corruption = "gaussian_noise";
  slot.severity = 2;
  spec.slots = {slot};
  spec.batch_size = b;
  spec.seed = seed;
  return streams::materialize_stream(spec, task);
}

methods::Hyperparameters fast(const std::string& name) {
  methods::Hyperparameters hp;
  if (name == "memo" || name == "cotta") hp["augmentations"] = 4;
  return hp;
}

// Plays back a fixed accuracy per step: the first round(J * b) samples are
// predicted correctly, the rest wrong. The step counter is method state.
class Scripted final : public methods::Strategy {
 public:
  Scripted(std::vector<double> script, std::vector<std::size_t> labels)
      : Strategy("scripted", {}), script_(std::move(script)), labels_(std::move(labels)) {}
  methods::Metadata metadata() const override { return {}; }
  std::vector<ParamGroup> update_groups() const override { return {}; }
  methods::Predictions adapt(AdaptiveModel& m, const Tensor& x, const methods::StepContext&) override {
    step_ = std::min(step_ + 1, script_.size() - 1);
    return predict(m, x);
  }
  methods::Predictions predict(AdaptiveModel&, const Tensor& x) const override {
    Tensor probs(x.batch(), {3, 1});
    const auto correct = static_cast<std::size_t>(std::lround(script_[step_] * x.batch()));
    for (std::size_t i = 0; i < x.batch(); ++i) probs.at(i, i < correct ? labels_[i] : (labels_[i] + 1) % 3) = 1.0;
    return methods::Predictions::from_probabilities(probs);
  }

 protected:
  void reset_extra(AdaptiveModel&) override { step_ = 0; }
  void save_extra(ByteWriter& out) const override { out.put_u64(step_); }
  void load_extra(ByteReader& in) override { step_ = in.get_u64(); }

 private:
  std::vector<double> script_;
  std::vector<std::size_t> labels_;
  std::size_t step_ = 0;
};

// TENT that records the parameters it sees at the start of every batch.
class SpyTent final : public methods::Tent {
 public:
  SpyTent() : Tent(methods::resolve_hyperparameters("tent", {{"lr", 0.05}})) {}
  methods::Predictions adapt(AdaptiveModel& m, const Tensor& x, const methods::StepContext& ctx) override {
    if (ctx.step_index == 0) seen.push_back(m.snapshot());
    return Tent::adapt(m, x, ctx);
  }
  std::vector<ModelState> seen;
};

}  // namespace

TEST_CASE("protocol modes parse and validate") {
  for (auto m : {ProtocolMode::kEpisodicOracle, ProtocolMode::kOnlineOracle, ProtocolMode::kEpisodicLast,
                 ProtocolMode::kOnlineLast})
    CHECK(parse_protocol_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_protocol_mode("sometimes"), Error);
  ProtocolConfig cfg;
  cfg.max_steps = 0;
  try {
    cfg.validate();
    FAIL("expected ConfigInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigInvalid);
  }
}

TEST_CASE("oracle selection matches brute-force enumeration of the candidate set") {
  const auto stream = toy_stream();
  for (const auto& name : methods::method_names()) {
    for (std::size_t steps = 1; steps <= 5; steps += 2) {
      CAPTURE(name);
      CAPTURE(steps);
      AdaptiveModel m = tiny_mlp(NormKind::kBatch, 3, {2, 4}, 6, 3, name == "ttt" ? 4 : 0);
      auto hp = fast(name);
      if (methods::make_strategy(name)->hyperparameters().count("lr")) hp["lr"] = 0.05;
      auto s = methods::make_strategy(name, hp);
      s->reseed(9);
      s->initialize(m);
      const TestBatch& batch = stream[1];

      // brute force on an independent copy
      AdaptiveModel bm = m;
      auto bs = methods::make_strategy(name, hp);
      bs->reseed(9);
      bs->initialize(bm);
      std::vector<double> j = {batch_accuracy(bs->predict(bm, batch.inputs).labels, batch.labels)};
      std::vector<ModelState> states = {bm.snapshot()};
      for (std::size_t k = 0; k < steps; ++k) {
        bs->adapt(bm, batch.inputs, {k});
        j.push_back(batch_accuracy(bs->predict(bm, batch.inputs).labels, batch.labels));
        states.push_back(bm.snapshot());
      }
      const std::size_t expect = std::max_element(j.begin(), j.end()) - j.begin();

      const OracleResult r = oracle_select(m, *s, batch, steps);
      CHECK(r.scores == j);
      CHECK(r.selected_step == expect);
      for (double v : j) CHECK(r.scores[r.selected_step] >= v);
      CHECK(r.scores[r.selected_step] >= j[0]);
      ModelState now = m.snapshot();
      CHECK(now.parameters == states[expect].parameters);
      CHECK(now.running_stats == states[expect].running_stats);
      CHECK(batch_accuracy(r.predictions.labels, batch.labels) == j[expect]);
    }
  }
}

TEST_CASE("oracle on a scripted trajectory picks the first best step") {
  const auto stream = toy_stream();
  const TestBatch& batch = stream[0];
  REQUIRE(batch.labels.size() == 16);
  // 16 samples cannot hit 0.65 exactly; scale the batch to 20 rows instead
  TestBatch b20;
  b20.inputs = Tensor(20, {2, 4});
  b20.labels.resize(20);
  for (std::size_t i = 0; i < 20; ++i) b20.labels[i] = i % 3;
  Scripted s({0.60, 0.70, 0.65, 0.65}, b20.labels);
  AdaptiveModel m = tiny_mlp(NormKind::kBatch, 1);
  s.initialize(m);
  const OracleResult r = oracle_select(m, s, b20, 3);
  CHECK(r.scores == std::vector<double>{0.60, 0.70, 0.65, 0.65});
  CHECK(r.selected_step == 1);

  Scripted flat({0.5, 0.5, 0.5, 0.5}, b20.labels);
  flat.initialize(m);
  const OracleResult f = oracle_select(m, flat, b20, 3);
  CHECK(f.selected_step == 0);
}

TEST_CASE("no-op strategy: selected state is the input, every mode scores the baseline") {
  const auto stream = toy_stream();
  AdaptiveModel m = tiny_mlp(NormKind::kBatch, 4);
  const ModelState source = m.snapshot();
  std::size_t correct = 0, total = 0;
  for (const auto& b : stream) {
    const auto pred = argmax_rows(m.forward(b.inputs).logits);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == b.labels[i];
    total += pred.size();
  }
  const double baseline = 100.0 * (1.0 - static_cast<double>(correct) / total);
  for (auto mode : {ProtocolMode::kEpisodicOracle, ProtocolMode::kOnlineOracle, ProtocolMode::kEpisodicLast,
                    ProtocolMode::kOnlineLast}) {
    auto s = methods::make_strategy("no_adapt");
    ProtocolConfig cfg;
    cfg.mode = mode;
    cfg.max_steps = 3;
    const RunRecord rec = run_protocol(m, *s, stream, cfg, 1);
    CHECK(rec.stream_error == doctest::Approx(baseline).epsilon(1e-12));
    CHECK(m.snapshot() == source);
    for (const auto& e : rec.batches)
      if (is_oracle(mode)) CHECK(e.selected_step == 0);
  }
}

TEST_CASE("episodic modes start every batch from the source state") {
  const auto stream = toy_stream();
  for (auto mode : {ProtocolMode::kEpisodicOracle, ProtocolMode::kEpisodicLast}) {
    AdaptiveModel m = tiny_mlp(NormKind::kBatch, 5);
    const ModelState source = m.snapshot();
    SpyTent s;
    ProtocolConfig cfg;
    cfg.mode = mode;
    cfg.max_steps = 3;
    cfg.learning_rate = 0.05;
    run_protocol(m, s, stream, cfg, 2);
    REQUIRE(s.seen.size() == stream.size());
    for (const auto& st : s.seen) CHECK(st == source);
  }
  // online: the second batch starts from the adapted state
  AdaptiveModel m = tiny_mlp(NormKind::kBatch, 5);
  const ModelState source = m.snapshot();
  SpyTent s;
  ProtocolConfig cfg;
  cfg.mode = ProtocolMode::kOnlineLast;
  cfg.max_steps = 2;
  cfg.learning_rate = 0.05;
  run_protocol(m, s, stream, cfg, 2);
  CHECK(s.seen[1].parameters != source.parameters);
}

TEST_CASE("online oracle dominates the last iterate batch by batch from a shared state") {
  const auto stream = toy_stream(8, 8);
  AdaptiveModel m = tiny_mlp(NormKind::kBatch, 6);
  auto s = methods::make_strategy("tent", {{"lr", 0.05}});
  s->initialize(m);
  for (const auto& b : stream) {
    const Capture here = capture(m, *s);
    AdaptiveModel copy = m;
    auto last = methods::make_strategy("tent", {{"lr", 0.05}});
    last->initialize(copy);
    last->load_state(here.state.aux_state);
    methods::Predictions p;
    for (std::size_t k = 0; k < 4; ++k) p = last->adapt(copy, b.inputs, {k});
    const double last_acc = batch_accuracy(p.labels, b.labels);
    const OracleResult r = oracle_select(m, *s, b, 4);
    CHECK(r.scores[r.selected_step] >= last_acc);
  }
}

TEST_CASE("episodic independence under batch permutation") {
  const auto stream = toy_stream(9, 6);
  std::vector<TestBatch> reversed(stream.rbegin(), stream.rend());
  for (const std::string name : {"tent", "memo", "cotta", "t3a", "note", "shot"}) {
    CAPTURE(name);
    for (auto mode : {ProtocolMode::kEpisodicOracle, ProtocolMode::kEpisodicLast}) {
      ProtocolConfig cfg;
      cfg.mode = mode;
      cfg.max_steps = 2;
      cfg.learning_rate = 0.01;
      AdaptiveModel m1 = tiny_mlp(NormKind::kBatch, 7);
      AdaptiveModel m2 = m1;
      auto s1 = methods::make_strategy(name, fast(name));
      auto s2 = methods::make_strategy(name, fast(name));
      const RunRecord a = run_protocol(m1, *s1, stream, cfg, 3);
      const RunRecord b = run_protocol(m2, *s2, reversed, cfg, 3);
      for (const auto& e : a.batches) {
        const auto it = std::find_if(b.batches.begin(), b.batches.end(),
                                     [&](const BatchEntry& x) { return x.batch_index == e.batch_index; });
        REQUIRE(it != b.batches.end());
        CHECK(*it == e);
      }
    }
  }
}

TEST_CASE("run records are reproducible and self-consistent") {
  const auto stream = toy_stream(10, 5);
  ProtocolConfig cfg;
  cfg.mode = ProtocolMode::kOnlineOracle;
  cfg.max_steps = 3;
  cfg.learning_rate = 0.01;
  auto run = [&] {
    AdaptiveModel m = tiny_mlp(NormKind::kBatch, 8);
    auto s = methods::make_strategy("memo", fast("memo"));
    return run_protocol(m, *s, stream, cfg, 4);
  };
  const RunRecord a = run();
  const RunRecord b = run();
  CHECK(a == b);
  CHECK(a.runtime_s == 0.0);
  CHECK(a.stream_error == doctest::Approx(100.0 * (1.0 - a.overall_accuracy())).epsilon(1e-12));
  double correct = 0, total = 0;
  for (const auto& e : a.batches) {
    correct += e.accuracy * e.size;
    total += e.size;
    CHECK(e.loss >= 0.0);
    CHECK(e.mean_entropy >= 0.0);
    CHECK(e.mean_entropy <= std::log(3.0) + 1e-12);
  }
  CHECK(std::abs(a.overall_accuracy() - correct / total) < 1e-9);
}

TEST_CASE("grid search contract") {
  const auto stream_factory = [] { return toy_stream(12, 4); };
  AdaptiveModel gn = tiny_mlp(NormKind::kGroup, 9);
  const auto tent = [] { return methods::make_strategy("tent"); };
  ProtocolConfig base;
  base.mode = ProtocolMode::kOnlineLast;

  const std::vector<GridCell> single = {{0.01, 2}};
  const GridResult one = grid_search(gn, tent, stream_factory, single, base, 1);
  CHECK(one.rows.size() == 1);
  CHECK(one.best == 0);
  CHECK(one.best_row().cell.steps == 2);

  // GN has no running statistics, so TENT at eta = 0 is the unadapted model
  const auto batches = stream_factory();
  AdaptiveModel copy = gn;
  auto none = methods::make_strategy("no_adapt");
  const double baseline = run_protocol(copy, *none, batches, base, 1).stream_error;
  const std::vector<GridCell> grid = {{0.0, 1}, {0.05, 1}, {0.05, 5}, {0.5, 5}};
  const GridResult r = grid_search(gn, tent, stream_factory, grid, base, 1);
  CHECK(r.rows[0].error_percent == doctest::Approx(baseline).epsilon(1e-12));
  for (const auto& row : r.rows) CHECK(r.best_row().error_percent <= row.error_percent);

  const GridResult threaded = grid_search(gn, tent, stream_factory, grid, base, 1, 3);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(threaded.rows[i].record == r.rows[i].record);

  const std::string csv = grid_csv(r, "abc123");
  CHECK(csv.rfind("method,mode,eta,steps,seed,stream_spec_hash,error_percent,runtime_s\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find("tent,online_last,0.050000000000000003,5,1,abc123,") != std::string::npos);

  CHECK(default_grid().size() == 35);
  CHECK(default_grid(true).size() == 30);
  CHECK_THROWS_AS(grid_search(gn, tent, stream_factory, std::vector<GridCell>{}, base, 1), Error);
}
