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
#include <filesystem>

#include "tta/core/error.hpp"
#include "tta/core/math.hpp"
#include "tta/methods/losses.hpp"
#include "tta/pretrain/pretrain.hpp"
#include "tta/streams/corruption.hpp"
#include "tta/streams/stream.hpp"

using namespace tta;
using namespace tta::pretrain;

namespace {

streams::SyntheticTask task(std::uint64_t seed = 7) {
  streams::SyntheticTaskConfig c;
  c.seed = seed;
  return streams::SyntheticTask(c);
}

ToyModelSpec small_spec(Architecture a = Architecture::kMlpBn) {
  ToyModelSpec s;
  s.architecture = a;
  s.width = 16;
  s.classes = 6;
  s.input = {2, 8};
  return s;
}

TrainConfig quick(std::size_t epochs, std::uint64_t seed) {
  TrainConfig c;
  c.epochs = epochs;
  c.train_size = 512;
  c.val_size = 1024;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("model zoo exposes the parameter groups") {
  for (auto a : {Architecture::kMlpBn, Architecture::kMlpGn, Architecture::kMlpLn, Architecture::kSmallConvBn}) {
    CAPTURE(to_string(a));
    ToyModelSpec s = small_spec(a);
    s.aux_head = true;
    AdaptiveModel m = build_model(s, 1);
    CHECK(parse_architecture(to_string(a)) == a);
    CHECK(m.class_count() == 6);
    CHECK(m.aux_class_count() == 4);
    CHECK(!m.parameter_names(ParamGroup::kNormAffine).empty());
    CHECK(!m.parameter_names(ParamGroup::kExtractor).empty());
    CHECK(m.has_batch_norm() == (a == Architecture::kMlpBn || a == Architecture::kSmallConvBn));
    CHECK(build_model(s, 1).snapshot() == m.snapshot());
    CHECK(build_model(s, 2).snapshot() != m.snapshot());
    std::size_t total = 0;
    for (auto g : {ParamGroup::kNormAffine, ParamGroup::kExtractor, ParamGroup::kClassifier, ParamGroup::kAux})
      total += m.parameter_count(g);
    CHECK(total == m.parameter_count(ParamGroup::kAll));
  }
  CHECK_THROWS_AS(parse_architecture("resnet26"), Error);
}

TEST_CASE("mixup endpoints and midpoint") {
  Tensor x1(2, {3, 1}, 1.0), x2(2, {3, 1}, -1.0);
  const std::vector<std::size_t> l1 = {0, 0}, l2 = {1, 1};
  const Tensor y1 = one_hot(l1, 4), y2 = one_hot(l2, 4);
  const Mixed a = mixup(x1, y1, x2, y2, 1.0);
  CHECK(a.x.data() == x1.data());
  CHECK(a.y.data() == y1.data());
  const Mixed b = mixup(x1, y1, x2, y2, 0.0);
  CHECK(b.x.data() == x2.data());
  CHECK(b.y.data() == y2.data());
  const Mixed c = mixup(x1, y1, x2, y2, 0.5);
  CHECK(std::vector<double>(c.y.row(0).begin(), c.y.row(0).end()) == std::vector<double>{0.5, 0.5, 0.0, 0.0});
  CHECK_THROWS_AS(mixup(x1, y1, x2, y2, 1.5), Error);
}

TEST_CASE("augmentation policies") {
  const auto t = task();
  const auto data = streams::sample_split(t, 32, 1);
  for (auto kind : {AugKind::kNone, AugKind::kStandard, AugKind::kMixupStandard, AugKind::kStrongA, AugKind::kStrongB}) {
    CAPTURE(to_string(kind));
    AugPolicy p;
    p.kind = kind;
    std::mt19937_64 r1(3), r2(3);
    const Tensor a = augment(p, data.inputs, r1);
    CHECK(augment(p, data.inputs, r2).data() == a.data());
    if (kind == AugKind::kNone) {
      CHECK(a.data() == data.inputs.data());
    } else {
      CHECK(a.data() != data.inputs.data());
    }
    for (double v : a.data()) CHECK(std::isfinite(v));
    CHECK(parse_aug_kind(to_string(kind)) == kind);
  }
}

TEST_CASE("label smoothing at zero is plain cross-entropy") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 2);
  Tensor z(7, {5, 1});
  for (double& v : z.data()) v = n(rng);
  const std::vector<std::size_t> y = {0, 4, 2, 2, 1, 3, 0};
  CHECK(smoothed_cross_entropy(z, y, 0.0) == methods::hard_cross_entropy(z, y).value);
  // eps > 0: value matches the direct formula
  const double eps = 0.2;
  const Tensor lp = methods::clamped_log_probs(z);
  double direct = 0.0;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t c = 0; c < 5; ++c) direct -= ((c == y[i] ? 1.0 - eps : 0.0) + eps / 5) * lp.at(i, c) / 7;
  CHECK(smoothed_cross_entropy(z, y, eps) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("epoch 0 is a chance-level checkpoint") {
  const auto t = task();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const CheckpointSequence seq = train_base(t, small_spec(), {}, quick(0, seed));
    REQUIRE(seq.checkpoints.size() == 1);
    CHECK(seq.checkpoints[0].epoch == 0);
    // balanced validation labels: a label-blind predictor scores 1/6 in expectation;
    // four binomial standard deviations on 1024 rows plus slack for input dependence
    const double sd = std::sqrt((1.0 / 6) * (5.0 / 6) / 1024);
    CHECK(std::abs(seq.checkpoints[0].val_accuracy - 1.0 / 6) < 4 * sd + 0.05);
  }
}

TEST_CASE("training is deterministic and its loss trends down") {
  const auto t = task();
  TrainConfig cfg = quick(20, 5);
  for (std::size_t e = 1; e <= 20; ++e) cfg.checkpoint_epochs.push_back(e);
  const CheckpointSequence a = train_base(t, small_spec(), {}, cfg);
  const CheckpointSequence b = train_base(t, small_spec(), {}, cfg);
  REQUIRE(a.checkpoints.size() == 20);
  CHECK(a.checkpoints.back().state == b.checkpoints.back().state);
  int violations = 0;
  for (std::size_t i = 1; i < a.checkpoints.size(); ++i)
    violations += a.checkpoints[i].train_loss > a.checkpoints[i - 1].train_loss;
  CHECK(violations <= 2);
  for (std::size_t i = 1; i < a.checkpoints.size(); ++i) CHECK(a.checkpoints[i].epoch > a.checkpoints[i - 1].epoch);
  CHECK_THROWS_AS(train_base(t, small_spec(), {}, [] {
    TrainConfig c = quick(2, 1);
    c.checkpoint_epochs = {3};
    return c;
  }()), Error);
}

TEST_CASE("aux-head and mixup training run end to end") {
  const auto t = task();
  ToyModelSpec s = small_spec();
  s.aux_head = true;
  AugPolicy p;
  p.kind = AugKind::kMixupStandard;
  const CheckpointSequence seq = train_base(t, s, p, quick(3, 2));
  CHECK(seq.checkpoints.back().val_accuracy > 0.3);
  CHECK(std::isfinite(seq.checkpoints.back().train_loss));
}

TEST_CASE("quality ladder spans at least 20 points") {
  const auto t = task();
  TrainConfig cfg = quick(16, 3);
  cfg.checkpoint_epochs = {0, 1, 2, 4, 8, 16};
  const CheckpointSequence seq = train_base(t, small_spec(), {}, cfg);
  REQUIRE(seq.checkpoints.size() == 6);
  CHECK(seq.checkpoints.back().val_accuracy - seq.checkpoints.front().val_accuracy >= 0.20);
}

TEST_CASE("classifier fine-tuning freezes the extractor") {
  const auto t = task();
  AdaptiveModel m = build_model(small_spec(), 3);
  const ModelState before = m.snapshot();
  finetune_classifier(m, t, std::vector<double>(6, 1.0 / 6), {});
  const ModelState after = m.snapshot();
  for (const auto& [name, v] : before.parameters) {
    if (name.rfind("classifier.", 0) == 0) {
      CHECK(after.parameters.at(name) != v);
    } else {
      CHECK(after.parameters.at(name) == v);
    }
  }
  CHECK(after.running_stats == before.running_stats);

  // class 2 has no data in this adapter
  Tensor x(6, {2, 8}, 0.5);
  streams::InMemoryAdapter holes(x, {0, 1, 3, 4, 5, 0}, 6);
  try {
    finetune_classifier(m, holes, std::vector<double>(6, 1.0 / 6), {});
    FAIL("expected EmptyClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyClass);
  }
}

TEST_CASE("skewed fine-tuning favours the over-represented classes") {
  const auto t = task();
  TrainConfig cfg = quick(10, 1);
  const CheckpointSequence base = train_base(t, small_spec(), {}, cfg);
  const auto balanced = streams::sample_split(t, 1200, 99);
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const auto props = streams::sample_dirichlet(0.1, 6, rng);
    AdaptiveModel m = build_model(small_spec(), 0);
    m.restore(base.checkpoints.back().state);
    FinetuneConfig fc;
    fc.seed = seed;
    finetune_classifier(m, t, props, fc);
    const auto pred = argmax_rows(m.forward(balanced.inputs).logits);
    std::vector<double> hit(6, 0.0), count(6, 0.0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      count[balanced.labels[i]] += 1;
      hit[balanced.labels[i]] += pred[i] == balanced.labels[i];
    }
    std::vector<double> recall(6);
    for (std::size_t c = 0; c < 6; ++c) recall[c] = hit[c] / count[c];
    const std::size_t top = std::max_element(props.begin(), props.end()) - props.begin();
    wins += recall[top] == *std::max_element(recall.begin(), recall.end());
  }
  CHECK(wins >= 3);
}

TEST_CASE("strong augmentation policies give a more robust baseline") {
  const auto t = task();
  streams::StreamSpec spec;
  // one severity-3 slot per corruption family
  for (const char* name : {"gaussian_noise", "contrast", "blur", "pixelate_analogue"}) {
    streams::SlotSpec slot;
    slot.trials = 512;
    slot.corruption = name;
    slot.severity = 3;
    spec.slots.push_back(slot);
  }
  spec.batch_size = 64;
  int wins_a = 0, wins_b = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    spec.seed = seed;
    const auto stream = streams::materialize_stream(spec, t);
    auto corrupted_accuracy = [&](AugKind kind) {
      AugPolicy p;
      p.kind = kind;
      const CheckpointSequence seq = train_base(t, small_spec(), p, quick(12, seed));
      AdaptiveModel m = build_model(small_spec(), seed);
      m.restore(seq.checkpoints.back().state);
      double ok = 0, n = 0;
      for (const auto& b : stream) {
        const auto pred = argmax_rows(m.forward(b.inputs).logits);
        for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == b.labels[i];
        n += pred.size();
      }
      return ok / n;
    };
    const double none = corrupted_accuracy(AugKind::kNone);
    wins_a += corrupted_accuracy(AugKind::kStrongA) > none;
    wins_b += corrupted_accuracy(AugKind::kStrongB) > none;
  }
  CHECK(wins_a >= 3);
  CHECK(wins_b >= 3);
}

TEST_CASE("checkpoint sequences round-trip through a directory") {
  const auto t = task();
  TrainConfig cfg = quick(2, 4);
  cfg.checkpoint_epochs = {0, 1, 2};
  AugPolicy p;
  p.kind = AugKind::kStrongB;
  const CheckpointSequence seq = train_base(t, small_spec(Architecture::kSmallConvBn), p, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "tta_pretrain_roundtrip";
  std::filesystem::remove_all(dir);
  save_checkpoints(dir, seq);
  const CheckpointSequence back = load_checkpoints(dir);
  REQUIRE(back.checkpoints.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.checkpoints[i].epoch == seq.checkpoints[i].epoch);
    CHECK(back.checkpoints[i].val_accuracy == seq.checkpoints[i].val_accuracy);
    CHECK(back.checkpoints[i].train_loss == seq.checkpoints[i].train_loss);
    CHECK(back.checkpoints[i].state == seq.checkpoints[i].state);
  }
  CHECK(back.spec.architecture == Architecture::kSmallConvBn);
  CHECK(back.policy.kind == AugKind::kStrongB);
  CHECK(back.seed == 4);
  std::filesystem::remove_all(dir);
  try {
    load_checkpoints(dir);
    FAIL("expected MissingCheckpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingCheckpoint);
  }
}
