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

#include "tta/methods/registry.hpp"

#include <cmath>
#include <limits>

#include "tta/core/error.hpp"
#include "tta/methods/methods.hpp"

namespace tta::methods {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<HyperparameterSpec> gradient_keys(double fisher_lambda = 0.0, double restore_p = 0.0) {
  return {
      {"lr", 1e-3, "SGD learning rate", 0.0, kInf, false},
      {"momentum", 0.9, "SGD momentum", 0.0, 0.999999, false},
      {"fisher_lambda", fisher_lambda, "weight of the Fisher anchor penalty (0 = off)", 0.0, kInf, false},
      {"restore_p", restore_p, "per-element probability of restoring source weights", 0.0, 1.0, false},
  };
}

std::vector<HyperparameterSpec> with(std::vector<HyperparameterSpec> base, std::vector<HyperparameterSpec> extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  return base;
}

std::vector<HyperparameterSpec> augmentation_keys() {
  return {
      {"augmentations", 32, "augmented copies per input", 1, 4096, true},
      {"jitter", 0.1, "std of additive Gaussian jitter", 0.0, kInf, false},
      {"flip_prob", 0.5, "probability of reversing each channel", 0.0, 1.0, false},
      {"style_coordinate", 0, "input coordinate resampled as the style channel", 0, 1e9, true},
  };
}

std::vector<MethodInfo> build_catalog() {
  std::vector<MethodInfo> out;
  out.push_back({"ttt", "rotation self-supervision through an auxiliary head", {false, false, true},
                 gradient_keys()});
  out.push_back({"shot", "information maximization with centroid pseudo-labels", {false, false, false},
                 with(gradient_keys(), {{"beta", 0.3, "pseudo-label loss weight", 0.0, kInf, false},
                                        {"threshold", 0.9, "confidence needed for a pseudo-label", 0.0, 1.0, false}})});
  out.push_back({"bn_adapt", "batch-norm statistics re-estimation", {false, true, false},
                 {{"prior_n", 0, "pseudo-count N of the source statistics", 0.0, kInf, false}}});
  out.push_back({"tent", "entropy minimization on normalization affine parameters", {false, true, false},
                 gradient_keys()});
  out.push_back({"t3a", "classifier templates from low-entropy supports", {false, false, false},
                 {{"supports", 20, "supports kept per class (0 = unlimited)", 0, 1e9, true}}});
  out.push_back({"fisher", "entropy minimization with a Fisher anchor", {false, true, false}, gradient_keys(2000.0)});
  out.push_back({"conjugate_pl", "conjugate pseudo-labels (soft, temperature-scaled)", {false, true, false},
                 with(gradient_keys(), {{"temperature", 1.0, "pseudo-label temperature", 1e-9, kInf, false}})});
  out.push_back({"memo", "marginal entropy over augmentations", {true, false, false},
                 with(gradient_keys(), augmentation_keys())});
  out.push_back({"note", "balanced memory with batch-norm updates", {false, true, true},
                 with(gradient_keys(), {{"capacity", 64, "PBRS memory size", 1, 1e9, true},
                                        {"update_every", 1, "batches between memory updates", 1, 1e9, true},
                                        {"bn_momentum", 0.01, "running-stat momentum on the memory", 0.0, 1.0, false},
                                        {"iabn", 0, "1 = instance-aware normalization at inference", 0, 1, true},
                                        {"iabn_k", 4, "IABN shrinkage threshold", 0.0, kInf, false}})});
  out.push_back({"sar", "sharpness-aware entropy minimization with reliable-sample filter", {true, false, false},
                 with(gradient_keys(), {{"rho", 0.05, "perturbation radius", 0.0, kInf, false},
                                        {"e0_factor", 0.4, "entropy filter as a fraction of log C", 0.0, kInf, false}})});
  auto cotta = with(gradient_keys(0.0, 0.01), {{"conf_threshold", 0.7, "teacher confidence below which targets are averaged", 0.0, 1.0, false},
                                               {"ema", 0.999, "teacher EMA coefficient", 0.0, 1.0, false}});
  cotta = with(std::move(cotta), augmentation_keys());
  out.push_back({"cotta", "mean teacher with augmentation averaging and stochastic restore", {false, false, false},
                 std::move(cotta)});
  out.push_back({"no_adapt", "source model, no adaptation", {false, false, false}, {}});
  return out;
}

std::unique_ptr<Strategy> construct(const std::string& name, Hyperparameters hp) {
  if (name == "no_adapt") return std::make_unique<NoAdapt>(std::move(hp));
  if (name == "bn_adapt") return std::make_unique<BnAdapt>(std::move(hp));
  if (name == "tent") return std::make_unique<Tent>(std::move(hp));
  if (name == "fisher") return std::make_unique<FisherTent>(std::move(hp));
  if (name == "conjugate_pl") return std::make_unique<ConjugatePl>(std::move(hp));
  if (name == "sar") return std::make_unique<Sar>(std::move(hp));
  if (name == "shot") return std::make_unique<Shot>(std::move(hp));
  if (name == "ttt") return std::make_unique<Ttt>(std::move(hp));
  if (name == "memo") return std::make_unique<Memo>(std::move(hp));
  if (name == "note") return std::make_unique<Note>(std::move(hp));
  if (name == "cotta") return std::make_unique<CoTta>(std::move(hp));
  if (name == "t3a") return std::make_unique<T3a>(std::move(hp));
  throw Error(ErrorCode::kUnknownMethod, name);
}

}  // namespace

const std::vector<MethodInfo>& method_catalog() {
  static const std::vector<MethodInfo> catalog = build_catalog();
  return catalog;
}

const MethodInfo& method_info(const std::string& name) {
  for (const auto& m : method_catalog())
    if (m.name == name) return m;
  throw Error(ErrorCode::kUnknownMethod, name);
}

std::vector<std::string> method_names() {
  std::vector<std::string> out;
  for (const auto& m : method_catalog()) out.push_back(m.name);
  return out;
}

Hyperparameters resolve_hyperparameters(const std::string& name, const Hyperparameters& overrides) {
  const MethodInfo& info = method_info(name);
  Hyperparameters hp;
  for (const auto& spec : info.hyperparameters) hp[spec.key] = spec.default_value;
  for (const auto& [key, value] : overrides) {
    const HyperparameterSpec* spec = nullptr;
    for (const auto& s : info.hyperparameters)
      if (s.key == key) spec = &s;
    if (!spec) throw Error(ErrorCode::kUnknownHyperparameter, name + "." + key);
    if (!std::isfinite(value) || value < spec->min || value > spec->max) {
      throw Error(ErrorCode::kInvalidArgument, name + "." + key + " out of range");
    }
    if (spec->integer && std::floor(value) != value) {
      throw Error(ErrorCode::kInvalidArgument, name + "." + key + " must be an integer");
    }
    hp[key] = value;
  }
  return hp;
}

std::unique_ptr<Strategy> make_strategy(const std::string& name, const Hyperparameters& overrides) {
  return construct(name, resolve_hyperparameters(name, overrides));
}

}  // namespace tta::methods
