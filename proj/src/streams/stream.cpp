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

#include "tta/streams/stream.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "tta/core/error.hpp"
#include "tta/core/log.hpp"
#include "tta/core/math.hpp"
#include "tta/streams/corruption.hpp"

namespace tta::streams {

SamplerKind parse_sampler(std::string_view name) {
  if (name == "iid") return SamplerKind::kIid;
  if (name == "dirichlet_label" || name == "dirichlet") return SamplerKind::kDirichletLabel;
  if (name == "class_ordered") return SamplerKind::kClassOrdered;
  throw Error(ErrorCode::kInvalidArgument, "unknown sampler " + std::string(name));
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kIid: return "iid";
    case SamplerKind::kDirichletLabel: return "dirichlet_label";
    case SamplerKind::kClassOrdered: return "class_ordered";
  }
  return "unknown";
}

ShiftKind parse_shift_kind(std::string_view name) {
  if (name == "none") return ShiftKind::kNone;
  if (name == "attribute_relationship") return ShiftKind::kAttributeRelationship;
  if (name == "attribute_values") return ShiftKind::kAttributeValues;
  if (name == "label") return ShiftKind::kLabel;
  if (name == "nonstationary") return ShiftKind::kNonstationary;
  throw Error(ErrorCode::kInvalidArgument, "unknown shift kind " + std::string(name));
}

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kNone: return "none";
    case ShiftKind::kAttributeRelationship: return "attribute_relationship";
    case ShiftKind::kAttributeValues: return "attribute_values";
    case ShiftKind::kLabel: return "label";
    case ShiftKind::kNonstationary: return "nonstationary";
  }
  return "unknown";
}

std::size_t StreamSpec::total_batches() const {
  if (batch_size == 0) return 0;
  std::size_t total = 0;
  for (const auto& s : slots) total += s.trials / batch_size;
  return total;
}

void StreamSpec::validate() const {
  if (slots.empty()) throw Error(ErrorCode::kInvalidArgument, "stream has no slots");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  for (std::size_t t = 0; t < slots.size(); ++t) {
    const auto& s = slots[t];
    if (s.trials < batch_size) {
      throw Error(ErrorCode::kInvalidArgument, "slot " + std::to_string(t) + " is shorter than one batch");
    }
    if (s.sampler == SamplerKind::kDirichletLabel && !(s.alpha > 0.0)) {
      throw Error(ErrorCode::kInvalidAlpha, std::to_string(s.alpha));
    }
    if (!s.corruption.empty()) parse_corruption(s.corruption);
    if (s.severity < 0 || s.severity > kMaxSeverity) throw Error(ErrorCode::kInvalidArgument, "severity out of range");
  }
}

// Marsaglia-Tsang for shape >= 1; smaller shapes are handled in log space as
// log G(a) = log G(a + 1) + log(U) / a, which stays finite for tiny alpha.
std::vector<double> sample_dirichlet(double alpha, std::size_t classes, std::mt19937_64& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::kInvalidAlpha, std::to_string(alpha));
  if (classes < 2) throw Error(ErrorCode::kInvalidArgument, "Dirichlet needs at least two classes");
  const double shape = alpha < 1.0 ? alpha + 1.0 : alpha;
  std::gamma_distribution<double> gamma(shape, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> logs(classes);
  for (auto& lg : logs) {
    double g = gamma(rng);
    while (g <= 0.0) g = gamma(rng);
    lg = std::log(g);
    if (alpha < 1.0) {
      double u = unit(rng);
      while (u <= 0.0) u = unit(rng);
      lg += std::log(u) / alpha;
    }
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> p(classes);
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    p[c] = std::exp(logs[c] - top);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::vector<double>> dirichlet_label_slots(double alpha, std::size_t classes, std::size_t n_slots,
                                                       std::size_t slot_size, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidAlpha, std::to_string(alpha));
  if (classes < 2) throw Error(ErrorCode::kInvalidArgument, "Dirichlet needs at least two classes");
  if (slot_size == 0) throw Error(ErrorCode::kInvalidArgument, "slot size must be positive");
  std::vector<std::vector<double>> out;
  out.reserve(n_slots);
  for (std::size_t t = 0; t < n_slots; ++t) {
    std::mt19937_64 rng(mix_seed(seed, t));
    out.push_back(sample_dirichlet(alpha, classes, rng));
  }
  return out;
}

// ---------------------------------------------------------------- StreamIterator

StreamIterator::StreamIterator(StreamSpec spec, const DatasetAdapter& adapter)
    : spec_(std::move(spec)), adapter_(&adapter) {
  spec_.validate();
}

void StreamIterator::open_slot(std::size_t t) {
  const SlotSpec& slot = spec_.slots[t];
  rng_.seed(mix_seed(spec_.seed, t));
  remaining_.clear();

  std::vector<double> labels = slot.label_proportions;
  if (slot.sampler == SamplerKind::kDirichletLabel) labels = sample_dirichlet(slot.alpha, adapter_->class_count(), rng_);
  const AttributeSpace space = adapter_->slot_space(labels, slot.correlation);
  for (std::size_t cell = 0; cell < space.cell_count(); ++cell) {
    if (space.table()[cell] > 0.0 && adapter_->cell_size(cell) == 0) {
      throw Error(ErrorCode::kEmptyCell, "slot " + std::to_string(t) + " needs cell " + std::to_string(cell));
    }
  }

  const std::size_t used = (slot.trials / spec_.batch_size) * spec_.batch_size;
  const std::size_t draws = slot.sampler == SamplerKind::kClassOrdered ? slot.trials : used;
  slot_cells_.resize(draws);
  for (auto& cell : slot_cells_) cell = space.sample(rng_);
  if (slot.sampler == SamplerKind::kClassOrdered) {
    std::stable_sort(slot_cells_.begin(), slot_cells_.end(), [this](std::size_t a, std::size_t b) {
      return adapter_->label_of_cell(a) < adapter_->label_of_cell(b);
    });
  }
  slot_pool_indices_.resize(draws);
  for (std::size_t i = 0; i < draws; ++i) slot_pool_indices_[i] = draw_index(slot_cells_[i]);
  slot_cells_.resize(used);
  slot_pool_indices_.resize(used);
  slot_cursor_ = 0;
}

std::size_t StreamIterator::draw_index(std::size_t cell) {
  const std::size_t size = adapter_->cell_size(cell);
  auto it = remaining_.find(cell);
  if (it == remaining_.end()) {
    std::vector<std::size_t> all(size);
    std::iota(all.begin(), all.end(), 0);
    it = remaining_.emplace(cell, std::move(all)).first;
  }
  auto& pool = it->second;
  if (pool.empty()) {
    if (spec_.replacement == ReplacementPolicy::kStrict) {
      throw Error(ErrorCode::kExhaustedSlot, "cell " + std::to_string(cell) + " has only " + std::to_string(size) +
                                                 " examples");
    }
    if (!warned_) {
      log_warning("stream: cell " + std::to_string(cell) + " exhausted, sampling with replacement");
      warned_ = true;
    }
    std::uniform_int_distribution<std::size_t> pick(0, size - 1);
    return pick(rng_);
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const std::size_t j = pick(rng_);
  const std::size_t index = pool[j];
  pool[j] = pool.back();
  pool.pop_back();
  return index;
}

std::optional<TestBatch> StreamIterator::next() {
  if (slot_ >= spec_.slots.size()) return std::nullopt;
  if (slot_cursor_ == 0) open_slot(slot_);
  const std::size_t b = spec_.batch_size;
  TestBatch batch;
  batch.slot_id = slot_;
  batch.batch_index = batch_index_++;
  batch.inputs = Tensor(0, adapter_->input_shape());
  batch.labels.reserve(b);
  for (std::size_t i = slot_cursor_; i < slot_cursor_ + b; ++i) {
    batch.inputs.append_row(adapter_->example(slot_cells_[i], slot_pool_indices_[i]));
    batch.labels.push_back(adapter_->label_of_cell(slot_cells_[i]));
  }
  const SlotSpec& slot = spec_.slots[slot_];
  if (!slot.corruption.empty() && slot.severity > 0) {
    batch.inputs = apply_corruption(batch.inputs, slot.corruption, slot.severity, rng_);
  }
  slot_cursor_ += b;
  if (slot_cursor_ >= slot_cells_.size()) {
    ++slot_;
    slot_cursor_ = 0;
  }
  return batch;
}

StreamIterator build_stream(const StreamSpec& spec, const DatasetAdapter& adapter) {
  return StreamIterator(spec, adapter);
}

std::vector<TestBatch> collect(StreamIterator stream) {
  std::vector<TestBatch> out;
  out.reserve(stream.total_batches());
  while (auto b = stream.next()) out.push_back(std::move(*b));
  return out;
}

std::vector<TestBatch> materialize_stream(const StreamSpec& spec, const DatasetAdapter& adapter) {
  return collect(build_stream(spec, adapter));
}

std::string describe(const StreamSpec& spec) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "batch_size = " << spec.batch_size << '\n';
  os << "seed = " << spec.seed << '\n';
  os << "shift_kind = " << to_string(spec.shift_kind) << '\n';
  os << "replacement = " << (spec.replacement == ReplacementPolicy::kStrict ? "strict" : "fallback") << '\n';
  for (std::size_t t = 0; t < spec.slots.size(); ++t) {
    const auto& s = spec.slots[t];
    const std::string k = "slot." + std::to_string(t) + ".";
    os << k << "trials = " << s.trials << '\n';
    os << k << "sampler = " << to_string(s.sampler) << '\n';
    if (s.sampler == SamplerKind::kDirichletLabel) os << k << "alpha = " << s.alpha << '\n';
    if (!s.label_proportions.empty()) {
      os << k << "label_proportions =";
      for (double p : s.label_proportions) os << ' ' << p;
      os << '\n';
    }
    if (s.correlation) os << k << "correlation = " << *s.correlation << '\n';
    if (!s.corruption.empty()) os << k << "corruption = " << s.corruption << ' ' << s.severity << '\n';
  }
  return os.str();
}

std::string stream_spec_hash(const StreamSpec& spec) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : describe(spec)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace tta::streams
