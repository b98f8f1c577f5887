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

#include "tta/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tta/core/error.hpp"
#include "tta/harness/scenario.hpp"
#include "tta/methods/registry.hpp"
#include "tta/streams/corruption.hpp"

namespace tta::harness {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kConfigInvalid, what); }

// Objects whose keys are free-form.
bool open_object(const std::string& path) { return path.ends_with("hyperparameters"); }

void check_keys(const json& user, const json& defaults, const std::string& path) {
  if (!user.is_object() || !defaults.is_object() || open_object(path)) return;
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!defaults.contains(key)) invalid("unknown key '" + here + "'");
    check_keys(value, defaults.at(key), here);
  }
}

template <class T>
T get(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid("bad value for '" + key + "': " + e.what());
  }
}

MethodEntry parse_method(const json& j) {
  MethodEntry m;
  if (j.is_string()) {
    m.name = j.get<std::string>();
  } else if (j.is_object()) {
    for (const auto& [key, value] : j.items())
      if (key != "name" && key != "hyperparameters") invalid("unknown key 'methods[]." + key + "'");
    m.name = get<std::string>(j, "name");
    if (j.contains("hyperparameters")) m.hyperparameters = get<methods::Hyperparameters>(j, "hyperparameters");
  } else {
    invalid("methods entries are names or {name, hyperparameters} objects");
  }
  try {
    methods::resolve_hyperparameters(m.name, m.hyperparameters);
  } catch (const Error& e) {
    invalid(e.what());
  }
  return m;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json methods_json = json::array();
  for (const auto& m : c.methods) methods_json.push_back({{"name", m.name}, {"hyperparameters", m.hyperparameters}});
  json protocols = json::array();
  for (auto p : c.protocols) protocols.push_back(std::string(selection::to_string(p)));
  json grid = json::array();
  for (const auto& g : c.grid) grid.push_back({{"eta", g.learning_rate}, {"steps", g.steps}});
  return {
      {"name", c.name},
      {"scenario", c.scenario},
      {"task",
       {{"classes", c.task.classes},
        {"input", {c.task.input.channels, c.task.input.length}},
        {"class_separation", c.task.class_separation},
        {"noise", c.task.noise},
        {"style_strength", c.task.style_strength},
        {"correlation", c.task.correlation},
        {"label_noise", c.task.label_noise},
        {"pool_per_cell", c.task.pool_per_cell},
        {"seed", c.task.seed}}},
      {"model",
       {{"architecture", std::string(pretrain::to_string(c.model.architecture))},
        {"width", c.model.width},
        {"depth", c.model.depth},
        {"aux_head", c.model.aux_head}}},
      {"policy",
       {{"kind", std::string(pretrain::to_string(c.policy.kind))},
        {"jitter", c.policy.jitter},
        {"mixup_alpha", c.policy.mixup_alpha},
        {"mix_width", c.policy.mix_width}}},
      {"pretrain",
       {{"epochs", c.train.epochs},
        {"checkpoint_epochs", c.train.checkpoint_epochs},
        {"train_size", c.train.train_size},
        {"val_size", c.train.val_size},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"momentum", c.train.momentum},
        {"label_smoothing", c.train.label_smoothing},
        {"aux_weight", c.train.aux_weight},
        {"seed", c.train.seed}}},
      {"checkpoint", {{"dir", c.checkpoint_dir}, {"index", c.checkpoint_index}}},
      {"methods", methods_json},
      {"include_baseline", c.include_baseline},
      {"protocols", protocols},
      {"learning_rate", c.learning_rate},
      {"max_steps", c.max_steps},
      {"record_runtime", c.record_runtime},
      {"stream",
       {{"batch_size", c.stream.batch_size},
        {"trials", c.stream.trials},
        {"corruptions", c.stream.corruptions},
        {"severity", c.stream.severity},
        {"alpha", c.stream.alpha},
        {"slots", c.stream.slots},
        {"rho_train", c.stream.rho_train},
        {"rho_test", c.stream.rho_test},
        {"label_noise", c.stream.label_noise}}},
      {"seeds", c.seeds},
      {"grid", grid},
      {"threads", c.threads},
      {"domain_uniform", c.domain_uniform},
      {"output_dir", c.output_dir},
  };
}

ExperimentConfig config_from_json(const json& user) {
  if (!user.is_object()) invalid("config must be a JSON object");
  const json defaults = to_json(ExperimentConfig{});
  check_keys(user, defaults, "");
  json d = defaults;
  d.merge_patch(user);

  ExperimentConfig c;
  c.name = get<std::string>(d, "name");
  c.scenario = get<std::string>(d, "scenario");
  {
    const json& t = d.at("task");
    c.task.classes = get<std::size_t>(t, "classes");
    const auto input = get<std::vector<std::size_t>>(t, "input");
    if (input.size() != 2) invalid("task.input must be [channels, length]");
    c.task.input = {input[0], input[1]};
    c.task.class_separation = get<double>(t, "class_separation");
    c.task.noise = get<double>(t, "noise");
    c.task.style_strength = get<double>(t, "style_strength");
    c.task.correlation = get<double>(t, "correlation");
    c.task.label_noise = get<double>(t, "label_noise");
    c.task.pool_per_cell = get<std::size_t>(t, "pool_per_cell");
    c.task.seed = get<std::uint64_t>(t, "seed");
  }
  try {
    const json& m = d.at("model");
    c.model.architecture = pretrain::parse_architecture(get<std::string>(m, "architecture"));
    c.model.width = get<std::size_t>(m, "width");
    c.model.depth = get<std::size_t>(m, "depth");
    c.model.aux_head = get<bool>(m, "aux_head");
    c.model.classes = c.task.classes;
    c.model.input = c.task.input;
    const json& p = d.at("policy");
    c.policy.kind = pretrain::parse_aug_kind(get<std::string>(p, "kind"));
    c.policy.jitter = get<double>(p, "jitter");
    c.policy.mixup_alpha = get<double>(p, "mixup_alpha");
    c.policy.mix_width = get<std::size_t>(p, "mix_width");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigInvalid) throw;
    invalid(e.what());
  }
  {
    const json& t = d.at("pretrain");
    c.train.epochs = get<std::size_t>(t, "epochs");
    c.train.checkpoint_epochs = get<std::vector<std::size_t>>(t, "checkpoint_epochs");
    c.train.train_size = get<std::size_t>(t, "train_size");
    c.train.val_size = get<std::size_t>(t, "val_size");
    c.train.batch_size = get<std::size_t>(t, "batch_size");
    c.train.learning_rate = get<double>(t, "learning_rate");
    c.train.momentum = get<double>(t, "momentum");
    c.train.label_smoothing = get<double>(t, "label_smoothing");
    c.train.aux_weight = get<double>(t, "aux_weight");
    c.train.seed = get<std::uint64_t>(t, "seed");
  }
  c.checkpoint_dir = get<std::string>(d.at("checkpoint"), "dir");
  c.checkpoint_index = get<long>(d.at("checkpoint"), "index");
  for (const json& m : d.at("methods")) c.methods.push_back(parse_method(m));
  c.include_baseline = get<bool>(d, "include_baseline");
  c.protocols.clear();
  for (const auto& p : get<std::vector<std::string>>(d, "protocols")) {
    try {
      c.protocols.push_back(selection::parse_protocol_mode(p));
    } catch (const Error& e) {
      invalid(e.what());
    }
  }
  c.learning_rate = get<double>(d, "learning_rate");
  c.max_steps = get<std::size_t>(d, "max_steps");
  c.record_runtime = get<bool>(d, "record_runtime");
  {
    const json& s = d.at("stream");
    c.stream.batch_size = get<std::size_t>(s, "batch_size");
    c.stream.trials = get<std::size_t>(s, "trials");
    c.stream.corruptions = get<std::vector<std::string>>(s, "corruptions");
    c.stream.severity = get<int>(s, "severity");
    c.stream.alpha = get<double>(s, "alpha");
    c.stream.slots = get<std::size_t>(s, "slots");
    c.stream.rho_train = get<double>(s, "rho_train");
    c.stream.rho_test = get<double>(s, "rho_test");
    c.stream.label_noise = get<double>(s, "label_noise");
  }
  c.seeds = get<std::vector<std::uint64_t>>(d, "seeds");
  for (const json& g : d.at("grid")) {
    if (!g.is_object()) invalid("grid entries are {eta, steps} objects");
    c.grid.push_back({get<double>(g, "eta"), get<std::size_t>(g, "steps")});
  }
  c.threads = get<std::size_t>(d, "threads");
  c.domain_uniform = get<bool>(d, "domain_uniform");
  c.output_dir = get<std::string>(d, "output_dir");

  const auto names = scenario_names();
  if (c.scenario != "suite" && std::find(names.begin(), names.end(), c.scenario) == names.end()) invalid("unknown scenario '" + c.scenario + "'");
  if (c.protocols.empty()) invalid("protocols is empty");
  if (c.seeds.empty()) invalid("seeds is empty");
  if (c.threads == 0) invalid("threads must be >= 1");
  if (c.stream.batch_size == 0 || c.stream.trials < c.stream.batch_size) invalid("stream.trials must cover one batch");
  if (c.stream.severity < 0 || c.stream.severity > streams::kMaxSeverity) invalid("stream.severity out of range");
  selection::ProtocolConfig pc;
  pc.learning_rate = c.learning_rate;
  pc.max_steps = c.max_steps;
  pc.validate();
  for (const auto& g : c.grid) {
    pc.learning_rate = g.learning_rate;
    pc.max_steps = g.steps;
    pc.validate();
  }
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) invalid("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!node->is_object()) invalid("cannot descend into '" + path[i] + "'");
    node = &(*node)[path[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) invalid("cannot set '" + key + "'");
  (*node)[path.back()] = value;
}

ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides) {
  json doc = json::object();
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) invalid("cannot read config '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) invalid("config '" + path + "' is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

}  // namespace tta::harness
