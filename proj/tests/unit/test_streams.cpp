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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "tta/core/error.hpp"
#include "tta/core/math.hpp"
#include "tta/streams/corruption.hpp"
#include "tta/streams/dataset.hpp"
#include "tta/streams/stream.hpp"

using namespace tta;
using namespace tta::streams;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected tta::Error");
  return ErrorCode::kIoError;
}

double tv_to_uniform(const std::vector<double>& p) {
  double tv = 0.0;
  for (double v : p) tv += std::abs(v - 1.0 / static_cast<double>(p.size()));
  return tv / 2.0;
}

StreamSpec iid_spec(std::size_t trials, std::size_t batch, std::uint64_t seed) {
  StreamSpec spec;
  spec.batch_size = batch;
  spec.seed = seed;
  SlotSpec slot;
  slot.trials = trials;
  spec.slots.push_back(slot);
  return spec;
}

}  // namespace

TEST_CASE("Dirichlet slots") {
  SUBCASE("large alpha is near uniform") {
    const auto slots = dirichlet_label_slots(1e6, 10, 100, 64, 1);
    double worst = 0.0;
    for (const auto& p : slots)
      for (double v : p) worst = std::max(worst, std::abs(v - 0.1));
    CHECK(worst < 0.01);
  }
  SUBCASE("tiny alpha concentrates on one class") {
    const auto slots = dirichlet_label_slots(0.01, 10, 200, 64, 2);
    double mean_max = 0.0;
    for (const auto& p : slots) {
      CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(*std::min_element(p.begin(), p.end()) >= 0.0);
      mean_max += *std::max_element(p.begin(), p.end());
    }
    CHECK(mean_max / 200.0 > 0.9);
  }
  SUBCASE("deterministic in seed") {
    CHECK(dirichlet_label_slots(0.5, 5, 10, 8, 3) == dirichlet_label_slots(0.5, 5, 10, 8, 3));
    CHECK(dirichlet_label_slots(0.5, 5, 10, 8, 3) != dirichlet_label_slots(0.5, 5, 10, 8, 4));
  }
  SUBCASE("severity decreases with alpha") {
    std::vector<double> means;
    for (double alpha : {0.01, 0.1, 1.0, 10.0}) {
      double m = 0.0;
      for (const auto& p : dirichlet_label_slots(alpha, 10, 400, 64, 5)) m += tv_to_uniform(p);
      means.push_back(m / 400.0);
    }
    for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] < means[i - 1]);
  }
  SUBCASE("mean proportion matches the symmetric Dirichlet mean") {
    std::vector<double> m(4, 0.0);
    for (const auto& p : dirichlet_label_slots(0.3, 4, 4000, 64, 6))
      for (std::size_t c = 0; c < 4; ++c) m[c] += p[c] / 4000.0;
    // Var of a component is (1/4)(3/4)/(4*0.3+1); the mean's std is that over sqrt(4000)
    const double se = std::sqrt(0.25 * 0.75 / 2.2 / 4000.0);
    for (double v : m) CHECK(std::abs(v - 0.25) < 4 * se);
  }
  CHECK(code_of([] { dirichlet_label_slots(0.0, 3, 1, 1, 0); }) == ErrorCode::kInvalidAlpha);
  CHECK(code_of([] { dirichlet_label_slots(-1.0, 3, 1, 1, 0); }) == ErrorCode::kInvalidAlpha);
}

TEST_CASE("corruptions") {
  std::mt19937_64 rng(1);
  Tensor x(64, {2, 8});
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : x.data()) v = n(rng);

  for (const auto& name : corruption_names()) {
    CHECK(apply_corruption(x, name, 0, rng) == x);
    double prev = 0.0;
    for (int s = 1; s <= 5; ++s) {
      std::mt19937_64 r(s);
      const Tensor y = apply_corruption(x, name, s, r);
      double d = 0.0;
      for (std::size_t i = 0; i < x.data().size(); ++i) d += std::pow(y.data()[i] - x.data()[i], 2);
      d = std::sqrt(d / static_cast<double>(x.batch()));
      INFO(name << " severity " << s);
      CHECK(d >= prev - 1e-12);
      prev = d;
    }
    CHECK(prev > 0.0);
  }
  CHECK(code_of([&] { apply_corruption(x, "fog2", 1, rng); }) == ErrorCode::kUnknownCorruption);
  CHECK(code_of([&] { apply_corruption(x, "blur", 6, rng); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("attribute space validation") {
  CHECK(code_of([] { AttributeSpace({{"label", 2}}, {0.5, 0.6}); }) == ErrorCode::kNotNormalized);
  CHECK(code_of([] { AttributeSpace({{"label", 2}}, {1.5, -0.5}); }) == ErrorCode::kNotNormalized);
  CHECK(code_of([] { AttributeSpace({{"label", 3}}, {0.5, 0.5}); }) == ErrorCode::kShapeMismatch);
  const AttributeSpace s = label_style_space({0.5, 0.5}, 2, 0.6);
  CHECK(s.cell_count() == 4);
  CHECK(s.values_of(s.cell_of({1, 0})) == std::vector<std::size_t>{1, 0});
  CHECK(s.table()[s.cell_of({0, 0})] == doctest::Approx(0.5 * 0.8));
  CHECK(code_of([] { label_style_space({1.0}, 2, 1.5); }) == ErrorCode::kInvalidCorrelation);
}

TEST_CASE("iid stream label histogram within 3 sigma of uniform") {
  SyntheticTask task({.classes = 5});
  const auto batches = materialize_stream(iid_spec(5000, 50, 9), task);
  CHECK(batches.size() == 100);
  std::vector<double> counts(5, 0.0);
  for (const auto& b : batches)
    for (auto y : b.labels) counts[y] += 1.0;
  const double n = 5000.0, p = 0.2;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (double c : counts) CHECK(std::abs(c - n * p) < 3 * sigma);
}

TEST_CASE("stream layout and determinism") {
  SyntheticTask task({.classes = 4});
  StreamSpec spec;
  spec.batch_size = 16;
  spec.seed = 77;
  spec.shift_kind = ShiftKind::kNonstationary;
  for (std::size_t t = 0; t < 3; ++t) {
    SlotSpec slot;
    slot.trials = 40 + t;  // floor(40/16) = 2 batches each
    slot.corruption = corruption_names()[t];
    slot.severity = 3;
    spec.slots.push_back(slot);
  }
  CHECK(spec.total_batches() == 6);
  const auto a = materialize_stream(spec, task);
  const auto b = materialize_stream(spec, task);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].inputs == b[i].inputs);
    CHECK(a[i].labels == b[i].labels);
    CHECK(a[i].batch_index == i);
    CHECK(a[i].slot_id == i / 2);
    for (double v : a[i].inputs.data()) CHECK(std::isfinite(v));
  }
  spec.seed = 78;
  CHECK(materialize_stream(spec, task)[0].inputs != a[0].inputs);
  CHECK(stream_spec_hash(spec) != stream_spec_hash(iid_spec(40, 16, 78)));
}

TEST_CASE("class_ordered slots are sorted by label") {
  SyntheticTask task({.classes = 6});
  StreamSpec spec = iid_spec(600, 20, 3);
  spec.slots[0].sampler = SamplerKind::kClassOrdered;
  std::vector<std::size_t> labels;
  for (const auto& b : materialize_stream(spec, task)) labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  CHECK(labels.size() == 600);
  CHECK(std::is_sorted(labels.begin(), labels.end()));
  CHECK(labels.front() == 0);
  CHECK(labels.back() == 5);
}

TEST_CASE("dirichlet_label slots skew batches") {
  SyntheticTask task({.classes = 10});
  StreamSpec spec;
  spec.batch_size = 50;
  spec.seed = 4;
  for (int t = 0; t < 20; ++t) {
    SlotSpec s;
    s.trials = 50;
    s.sampler = SamplerKind::kDirichletLabel;
    s.alpha = 0.01;
    spec.slots.push_back(s);
  }
  double mean_top = 0.0;
  for (const auto& b : materialize_stream(spec, task)) {
    std::vector<int> c(10, 0);
    for (auto y : b.labels) ++c[y];
    mean_top += *std::max_element(c.begin(), c.end()) / 50.0;
  }
  CHECK(mean_top / 20.0 > 0.85);
}

TEST_CASE("pool exhaustion and empty cells") {
  Tensor x(6, {1, 2});
  for (std::size_t i = 0; i < 6; ++i) x.at(i, 0) = static_cast<double>(i);
  InMemoryAdapter adapter(x, {0, 0, 0, 1, 1, 1}, 3);  // class 2 has no examples
  StreamSpec spec = iid_spec(6, 3, 1);
  spec.slots[0].label_proportions = {0.5, 0.5, 0.0};
  const auto batches = materialize_stream(spec, adapter);
  // 6 draws over 6 distinct rows when nothing is exhausted: every row may appear at most once
  std::vector<double> seen;
  for (const auto& b : batches)
    for (std::size_t i = 0; i < b.inputs.batch(); ++i) seen.push_back(b.inputs.at(i, 0));
  std::sort(seen.begin(), seen.end());
  if (std::count_if(seen.begin(), seen.end(), [](double v) { return v < 3; }) == 3) {
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  }

  StreamSpec big = iid_spec(60, 3, 1);
  big.slots[0].label_proportions = {0.5, 0.5, 0.0};
  CHECK(materialize_stream(big, adapter).size() == 20);  // fallback samples with replacement
  big.replacement = ReplacementPolicy::kStrict;
  CHECK(code_of([&] { materialize_stream(big, adapter); }) == ErrorCode::kExhaustedSlot);

  StreamSpec uniform = iid_spec(6, 3, 1);
  uniform.slots[0].label_proportions = {1.0, 1.0, 1.0};
  CHECK(code_of([&] { materialize_stream(uniform, adapter); }) == ErrorCode::kEmptyCell);

  StreamSpec short_slot = iid_spec(2, 3, 1);
  CHECK(code_of([&] { build_stream(short_slot, adapter); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("spurious task correlations") {
  const auto pair = spurious_task(0.8, -0.8, 0.0, {.classes = 2});
  const auto train = sample_split(pair.train, 10000, 1);
  const auto test = sample_split(pair.test, 10000, 2);
  const auto space = pair.train.attribute_space();
  auto style_accuracy = [&](const LabeledSet& s) {
    double agree = 0.0;
    for (std::size_t i = 0; i < s.labels.size(); ++i) agree += space.values_of(s.cells[i])[1] == s.labels[i];
    return agree / static_cast<double>(s.labels.size());
  };
  const double train_acc = style_accuracy(train);
  const double test_acc = style_accuracy(test);
  CHECK(std::abs(train_acc - 0.9) < 0.02);
  CHECK(std::abs(test_acc - (1.0 - train_acc)) < 0.02);

  const auto same = spurious_task(0.5, 0.5, 0.1, {.classes = 3});
  CHECK(same.train.attribute_space().table() == same.test.attribute_space().table());

  CHECK(code_of([] { spurious_task(1.2, 0.0, 0.0); }) == ErrorCode::kInvalidCorrelation);
  CHECK(code_of([] { spurious_task(0.2, 0.0, 0.6); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("synthetic pool is deterministic and label noise moves examples") {
  SyntheticTask a({.classes = 3, .seed = 5});
  SyntheticTask b({.classes = 3, .seed = 5});
  CHECK(a.example(1, 17) == b.example(1, 17));
  CHECK(a.example(1, 17) != a.example(1, 18));
  CHECK(code_of([&] { a.example(0, 1u << 20); }) == ErrorCode::kInvalidArgument);
}
