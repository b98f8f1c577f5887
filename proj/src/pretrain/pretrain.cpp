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

#include "tta/pretrain/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <numbers>
#include <sstream>

#include "tta/core/error.hpp"
#include "tta/core/layers.hpp"
#include "tta/core/math.hpp"
#include "tta/core/model_state.hpp"
#include "tta/methods/augment.hpp"
#include "tta/methods/losses.hpp"
#include "tta/methods/optimizer.hpp"

namespace tta::pretrain {

// ---------------------------------------------------------------- names

Architecture parse_architecture(std::string_view name) {
  if (name == "mlp_bn") return Architecture::kMlpBn;
  if (name == "mlp_gn") return Architecture::kMlpGn;
  if (name == "mlp_ln") return Architecture::kMlpLn;
  if (name == "smallconv_bn") return Architecture::kSmallConvBn;
  throw Error(ErrorCode::kConfigInvalid, "unknown architecture '" + std::string(name) + "'");
}

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::kMlpBn: return "mlp_bn";
    case Architecture::kMlpGn: return "mlp_gn";
    case Architecture::kMlpLn: return "mlp_ln";
    case Architecture::kSmallConvBn: return "smallconv_bn";
  }
  return "?";
}

AugKind parse_aug_kind(std::string_view name) {
  if (name == "none") return AugKind::kNone;
  if (name == "standard") return AugKind::kStandard;
  if (name == "mixup_standard") return AugKind::kMixupStandard;
  if (name == "strong_a") return AugKind::kStrongA;
  if (name == "strong_b") return AugKind::kStrongB;
  throw Error(ErrorCode::kConfigInvalid, "unknown augmentation policy '" + std::string(name) + "'");
}

std::string_view to_string(AugKind kind) {
  switch (kind) {
    case AugKind::kNone: return "none";
    case AugKind::kStandard: return "standard";
    case AugKind::kMixupStandard: return "mixup_standard";
    case AugKind::kStrongA: return "strong_a";
    case AugKind::kStrongB: return "strong_b";
  }
  return "?";
}

// ---------------------------------------------------------------- models

AdaptiveModel build_model(const ToyModelSpec& spec, std::uint64_t seed) {
  if (spec.width == 0 || spec.depth == 0 || spec.classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "model needs width, depth >= 1 and at least two classes");
  }
  std::mt19937_64 rng(mix_seed(seed, 0x6d6f64656cULL));
  std::vector<std::unique_ptr<Layer>> layers;
  const double he = std::sqrt(2.0);
  if (spec.architecture == Architecture::kSmallConvBn) {
    const std::size_t channels = std::max<std::size_t>(4, spec.width / 4);
    std::size_t cin = spec.input.channels;
    for (std::size_t d = 0; d < spec.depth; ++d) {
      auto conv = std::make_unique<Conv1d>(cin, channels, 3);
      conv->init(rng, he);
      layers.push_back(std::move(conv));
      layers.push_back(std::make_unique<Norm>(NormKind::kBatch, channels));
      layers.push_back(std::make_unique<Relu>());
      cin = channels;
    }
    layers.push_back(std::make_unique<Flatten>());
  } else {
    const NormKind kind = spec.architecture == Architecture::kMlpBn   ? NormKind::kBatch
                          : spec.architecture == Architecture::kMlpGn ? NormKind::kGroup
                                                                      : NormKind::kLayer;
    const std::size_t groups = kind == NormKind::kGroup ? (spec.width % 4 == 0 ? 4 : 1) : 1;
    layers.push_back(std::make_unique<Flatten>());
    std::size_t in = spec.input.size();
    for (std::size_t d = 0; d < spec.depth; ++d) {
      auto lin = std::make_unique<Linear>(in, spec.width);
      lin->init(rng, he);
      layers.push_back(std::move(lin));
      layers.push_back(std::make_unique<Norm>(kind, spec.width, groups));
      layers.push_back(std::make_unique<Relu>());
      in = spec.width;
    }
  }
  AdaptiveModel model(std::string(to_string(spec.architecture)), spec.input, std::move(layers), spec.classes,
                      spec.aux_head ? methods::kRotations : 0);
  auto init_head = [&](const std::string& prefix) {
    auto w = model.parameter(prefix + ".weight");
    const double scale = 1.0 / std::sqrt(static_cast<double>(model.embedding_dim()));
    std::normal_distribution<double> normal(0.0, scale);
    for (double& v : w) v = normal(rng);
  };
  init_head("classifier");
  if (spec.aux_head) init_head("aux");
  return model;
}

// ---------------------------------------------------------------- augmentation

namespace {

double beta_sample(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng), y = gb(rng);
  return x + y > 0.0 ? x / (x + y) : 0.5;
}

void jitter_row(std::span<double> r, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std);
  for (double& v : r) v += normal(rng);
}

void channel_drop(std::span<double> r, Shape shape, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, shape.channels - 1);
  const std::size_t c = pick(rng);
  for (std::size_t l = 0; l < shape.length; ++l) r[c * shape.length + l] = 0.0;
}

void random_affine(std::span<double> r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(0.4, 1.4), shift(-0.5, 0.5);
  const double a = scale(rng), b = shift(rng);
  double mean = 0.0;
  for (double v : r) mean += v / static_cast<double>(r.size());
  for (double& v : r) v = mean + a * (v - mean) + b;
}

// Sum of octaves of smoothed white noise, normalised to unit std.
std::vector<double> fractal_noise(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(shape.size(), 0.0);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t block = 1, octave = 0; block <= shape.length; block *= 2, ++octave) {
      const double amp = std::pow(0.5, static_cast<double>(octave) * 0.5);
      double level = 0.0;
      for (std::size_t l = 0; l < shape.length; ++l) {
        if (l % block == 0) level = normal(rng);
        out[c * shape.length + l] += amp * level;
      }
    }
  }
  double ss = 0.0;
  for (double v : out) ss += v * v;
  const double sd = std::sqrt(ss / static_cast<double>(out.size()));
  if (sd > 0.0)
    for (double& v : out) v /= sd;
  return out;
}

void strong_row(const AugPolicy& p, std::span<double> r, Shape shape, std::mt19937_64& rng) {
  const std::vector<double> original(r.begin(), r.end());
  std::vector<double> mixed(r.size(), 0.0);
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> w(std::max<std::size_t>(1, p.mix_width));
  double total = 0.0;
  for (double& v : w) total += (v = g(rng));
  std::uniform_int_distribution<int> ops(1, 3), which(0, 2);
  for (double wk : w) {
    std::vector<double> chain = original;
    const int n = ops(rng);
    for (int i = 0; i < n; ++i) {
      switch (which(rng)) {
        case 0: jitter_row(chain, p.jitter * std::uniform_real_distribution<double>(1.0, 4.0)(rng), rng); break;
        case 1: channel_drop(chain, shape, rng); break;
        default: random_affine(chain, rng); break;
      }
    }
    for (std::size_t f = 0; f < r.size(); ++f) mixed[f] += wk / total * chain[f];
  }
  const double m = beta_sample(1.0, 1.0, rng);
  for (std::size_t f = 0; f < r.size(); ++f) r[f] = m * original[f] + (1.0 - m) * mixed[f];
}

}  // namespace

Tensor augment(const AugPolicy& policy, const Tensor& x, std::mt19937_64& rng) {
  Tensor out = x;
  const Shape shape = x.shape();
  for (std::size_t n = 0; n < out.batch(); ++n) {
    auto r = out.row(n);
    switch (policy.kind) {
      case AugKind::kNone: break;
      case AugKind::kStandard:
      case AugKind::kMixupStandard: jitter_row(r, policy.jitter, rng); break;
      case AugKind::kStrongA:
        strong_row(policy, r, shape, rng);
        jitter_row(r, policy.jitter, rng);
        break;
      case AugKind::kStrongB: {
        strong_row(policy, r, shape, rng);
        jitter_row(r, policy.jitter, rng);
        const auto noise = fractal_noise(shape, rng);
        std::uniform_real_distribution<double> beta(0.0, 0.8);
        const double b = beta(rng);
        for (std::size_t f = 0; f < r.size(); ++f) r[f] += b * noise[f];
        break;
      }
    }
  }
  return out;
}

Mixed mixup(const Tensor& x1, const Tensor& y1, const Tensor& x2, const Tensor& y2, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw Error(ErrorCode::kInvalidArgument, "mixup lambda must be in [0, 1]");
  if (x1.batch() != x2.batch() || x1.shape() != x2.shape() || y1.batch() != y2.batch() || y1.shape() != y2.shape() ||
      x1.batch() != y1.batch()) {
    throw Error(ErrorCode::kShapeMismatch, "mixup operands differ in shape");
  }
  Mixed m{x1, y1};
  for (std::size_t i = 0; i < m.x.data().size(); ++i) m.x.data()[i] = lambda * x1.data()[i] + (1.0 - lambda) * x2.data()[i];
  for (std::size_t i = 0; i < m.y.data().size(); ++i) m.y.data()[i] = lambda * y1.data()[i] + (1.0 - lambda) * y2.data()[i];
  return m;
}

Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  Tensor y(labels.size(), {classes, 1});
  for (std::size_t i = 0; i < labels.size(); ++i) y.at(i, labels[i]) = 1.0;
  return y;
}

// ---------------------------------------------------------------- training

double smoothed_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels, double eps, Tensor* dlogits) {
  if (eps < 0.0 || eps > 1.0) throw Error(ErrorCode::kInvalidArgument, "label smoothing must be in [0, 1]");
  Tensor targets = one_hot(labels, logits.features());
  if (eps > 0.0) {
    const double c = static_cast<double>(logits.features());
    for (double& v : targets.data()) v = (1.0 - eps) * v + eps / c;
  }
  methods::LossGrad lg = methods::soft_cross_entropy(logits, targets);
  if (dlogits) *dlogits = std::move(lg.dlogits);
  return lg.value;
}

double accuracy(AdaptiveModel& model, const streams::LabeledSet& data) {
  if (data.labels.empty()) return 0.0;
  const auto pred = argmax_rows(model.forward(data.inputs).logits);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == data.labels[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

namespace {

struct EpochLoop {
  std::size_t batch_size;
  std::vector<std::size_t> order;

  template <typename Fn>
  void run(std::mt19937_64& rng, Fn&& fn) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      if (end - start < 2) break;  // batch statistics need two rows
      fn(std::span<const std::size_t>(order.data() + start, end - start));
    }
  }
};

}  // namespace

CheckpointSequence train_base(const streams::DatasetAdapter& task, const ToyModelSpec& spec, const AugPolicy& policy,
                              const TrainConfig& cfg) {
  if (task.class_count() != spec.classes || task.input_shape() != spec.input) {
    throw Error(ErrorCode::kShapeMismatch, "model spec does not match the task");
  }
  std::vector<std::size_t> wanted = cfg.checkpoint_epochs;
  if (wanted.empty()) wanted.push_back(cfg.epochs);
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  if (wanted.back() > cfg.epochs) throw Error(ErrorCode::kInvalidArgument, "checkpoint epoch beyond training length");
  if (cfg.batch_size < 2) throw Error(ErrorCode::kInvalidArgument, "batch size must be at least 2");

  CheckpointSequence seq;
  seq.spec = spec;
  seq.policy = policy;
  seq.seed = cfg.seed;
  AdaptiveModel model = build_model(spec, cfg.seed);
  const streams::LabeledSet train = streams::sample_split(task, cfg.train_size, mix_seed(cfg.seed, 1));
  const streams::LabeledSet val = streams::sample_split(task, cfg.val_size, mix_seed(cfg.seed, 2));
  std::mt19937_64 rng(mix_seed(cfg.seed, 3));
  methods::Sgd opt({cfg.learning_rate, cfg.momentum});
  const auto names = model.parameter_names(ParamGroup::kAll);

  ForwardOptions train_opts;
  train_opts.stats = StatsSource::kBatch;
  train_opts.update_running = true;
  ForwardOptions aux_opts;
  aux_opts.stats = StatsSource::kBatch;

  // reported loss: clean training split in inference mode
  auto record = [&](std::size_t epoch) {
    if (!std::binary_search(wanted.begin(), wanted.end(), epoch)) return;
    const double loss = methods::hard_cross_entropy(model.forward(train.inputs).logits, train.labels).value;
    seq.checkpoints.push_back({epoch, model.snapshot(), accuracy(model, val), loss});
  };
  record(0);

  EpochLoop loop{cfg.batch_size, std::vector<std::size_t>(train.labels.size())};
  std::iota(loop.order.begin(), loop.order.end(), 0);
  const std::size_t classes = spec.classes;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // cosine decay over the run
    opt.set_learning_rate(cfg.learning_rate * 0.5 *
                          (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs))));
    loop.run(rng, [&](std::span<const std::size_t> idx) {
      Tensor x = augment(policy, train.inputs.rows(idx), rng);
      std::vector<std::size_t> y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = train.labels[idx[i]];
      model.zero_grad();
      Tensor targets = one_hot(y, classes);
      if (cfg.label_smoothing > 0.0)
        for (double& v : targets.data()) v = (1.0 - cfg.label_smoothing) * v + cfg.label_smoothing / classes;
      Tensor inputs = x;
      if (policy.kind == AugKind::kMixupStandard) {
        std::vector<std::size_t> perm(idx.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const double lambda = beta_sample(policy.mixup_alpha, policy.mixup_alpha, rng);
        Mixed m = mixup(x, targets, x.rows(perm), targets.rows(perm), lambda);
        inputs = std::move(m.x);
        targets = std::move(m.y);
      }
      const methods::LossGrad lg = methods::soft_cross_entropy(model.forward(inputs, train_opts).logits, targets);
      model.backward(lg.dlogits);
      if (model.has_aux_head() && cfg.aux_weight > 0.0) {
        const Tensor rotated = methods::rotation_batch(inputs);
        std::vector<std::size_t> rot(rotated.batch());
        for (std::size_t i = 0; i < rot.size(); ++i) rot[i] = i / inputs.batch();
        methods::LossGrad aux = methods::hard_cross_entropy(model.forward_aux(rotated, aux_opts), rot);
        for (double& v : aux.dlogits.data()) v *= cfg.aux_weight;
        model.backward_aux(aux.dlogits);
      }
      opt.step(model, names);
    });
    record(epoch);
  }
  return seq;
}

// ---------------------------------------------------------------- classifier fine-tuning

void finetune_classifier(AdaptiveModel& model, const streams::DatasetAdapter& task,
                         const std::vector<double>& label_distribution, const FinetuneConfig& cfg) {
  const std::size_t classes = task.class_count();
  if (label_distribution.size() != classes) throw Error(ErrorCode::kShapeMismatch, "label distribution size");
  const streams::AttributeSpace full = task.attribute_space();
  for (std::size_t c = 0; c < classes; ++c) {
    if (label_distribution[c] <= 0.0) continue;
    std::size_t available = 0;
    for (std::size_t cell = 0; cell < full.cell_count(); ++cell)
      if (task.label_of_cell(cell) == c) available += task.cell_size(cell);
    if (available == 0) throw Error(ErrorCode::kEmptyClass, "no data for class " + std::to_string(c));
  }
  const streams::AttributeSpace space = task.slot_space(label_distribution, std::nullopt);
  const streams::LabeledSet data = streams::sample_split(task, space, cfg.samples, mix_seed(cfg.seed, 11));
  // Frozen extractor: embeddings are fixed, so compute them once.
  const Tensor z = model.embed(data.inputs);
  std::mt19937_64 rng(mix_seed(cfg.seed, 12));
  methods::Sgd opt({cfg.learning_rate, cfg.momentum});
  const std::size_t d = model.embedding_dim();
  EpochLoop loop{std::max<std::size_t>(2, cfg.batch_size), std::vector<std::size_t>(data.labels.size())};
  std::iota(loop.order.begin(), loop.order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    loop.run(rng, [&](std::span<const std::size_t> idx) {
      std::vector<std::size_t> y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = data.labels[idx[i]];
      const Tensor zb = z.rows(idx);
      const methods::LossGrad lg = methods::hard_cross_entropy(model.classify(zb), y);
      // linear head: dW = dlogits^T z, db = column sums of dlogits
      GradientSet g;
      auto& dw = g["classifier.weight"];
      auto& db = g["classifier.bias"];
      dw.assign(classes * d, 0.0);
      db.assign(classes, 0.0);
      for (std::size_t n = 0; n < zb.batch(); ++n) {
        for (std::size_t k = 0; k < classes; ++k) {
          const double gk = lg.dlogits.at(n, k);
          db[k] += gk;
          for (std::size_t f = 0; f < d; ++f) dw[k * d + f] += gk * zb.at(n, f);
        }
      }
      opt.step(model, g);
    });
  }
}

// ---------------------------------------------------------------- persistence

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoints(const std::filesystem::path& dir, const CheckpointSequence& seq) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  std::ostringstream manifest;
  manifest << "architecture = " << to_string(seq.spec.architecture) << "\n"
           << "width = " << seq.spec.width << "\n"
           << "depth = " << seq.spec.depth << "\n"
           << "classes = " << seq.spec.classes << "\n"
           << "input_channels = " << seq.spec.input.channels << "\n"
           << "input_length = " << seq.spec.input.length << "\n"
           << "aux_head = " << (seq.spec.aux_head ? 1 : 0) << "\n"
           << "policy = " << to_string(seq.policy.kind) << "\n"
           << "jitter = " << fmt(seq.policy.jitter) << "\n"
           << "mixup_alpha = " << fmt(seq.policy.mixup_alpha) << "\n"
           << "mix_width = " << seq.policy.mix_width << "\n"
           << "seed = " << seq.seed << "\n";
  for (const auto& c : seq.checkpoints) {
    const std::string file = "epoch_" + std::to_string(c.epoch) + ".tta";
    save_model_state(dir / file, c.state);
    manifest << "\n[checkpoint]\n"
             << "epoch = " << c.epoch << "\n"
             << "file = " << file << "\n"
             << "val_accuracy = " << fmt(c.val_accuracy) << "\n"
             << "train_loss = " << fmt(c.train_loss) << "\n";
  }
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  out << manifest.str();
  if (!out) throw Error(ErrorCode::kIoError, "cannot write manifest in " + dir.string());
}

CheckpointSequence load_checkpoints(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw Error(ErrorCode::kMissingCheckpoint, (dir / "manifest.txt").string());
  CheckpointSequence seq;
  std::map<std::string, std::string> head;
  std::vector<std::map<std::string, std::string>> blocks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line == "[checkpoint]") {
      blocks.emplace_back();
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kCorruptRecord, "manifest line " + std::to_string(lineno) + ": expected key = value");
    }
    (blocks.empty() ? head : blocks.back())[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const std::map<std::string, std::string>& m, const std::string& k) {
    const auto it = m.find(k);
    if (it == m.end()) throw Error(ErrorCode::kCorruptRecord, "manifest is missing '" + k + "'");
    return it->second;
  };
  try {
    seq.spec.architecture = parse_architecture(get(head, "architecture"));
    seq.spec.width = std::stoul(get(head, "width"));
    seq.spec.depth = std::stoul(get(head, "depth"));
    seq.spec.classes = std::stoul(get(head, "classes"));
    seq.spec.input = {std::stoul(get(head, "input_channels")), std::stoul(get(head, "input_length"))};
    seq.spec.aux_head = get(head, "aux_head") == "1";
    seq.policy.kind = parse_aug_kind(get(head, "policy"));
    seq.policy.jitter = std::stod(get(head, "jitter"));
    seq.policy.mixup_alpha = std::stod(get(head, "mixup_alpha"));
    seq.policy.mix_width = std::stoul(get(head, "mix_width"));
    seq.seed = std::stoull(get(head, "seed"));
    for (const auto& b : blocks) {
      Checkpoint c;
      c.epoch = std::stoul(get(b, "epoch"));
      c.val_accuracy = std::stod(get(b, "val_accuracy"));
      c.train_loss = std::stod(get(b, "train_loss"));
      c.state = load_model_state(dir / get(b, "file"));
      seq.checkpoints.push_back(std::move(c));
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::kCorruptRecord, "manifest has a malformed number in " + dir.string());
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::kCorruptRecord, "manifest has an out-of-range number in " + dir.string());
  }
  return seq;
}

}  // namespace tta::pretrain
