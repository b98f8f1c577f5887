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

#include "tta/harness/records.hpp"

#include <fstream>

#include "tta/core/error.hpp"

namespace tta::harness {

using nlohmann::json;

json record_to_json(const selection::RunRecord& r) {
  json batches = json::array();
  for (const auto& b : r.batches)
    batches.push_back({{"batch_index", b.batch_index},
                       {"slot_id", b.slot_id},
                       {"size", b.size},
                       {"accuracy", b.accuracy},
                       {"mean_entropy", b.mean_entropy},
                       {"loss", b.loss},
                       {"selected_step", b.selected_step}});
  return {{"schema_version", kSchemaVersion},
          {"method", r.method},
          {"protocol", r.protocol},
          {"stream_id", r.stream_id},
          {"config_hash", r.config_hash},
          {"scenario", r.scenario},
          {"seed", r.seed},
          {"learning_rate", r.learning_rate},
          {"steps", r.steps},
          {"stream_error", r.stream_error},
          {"runtime_s", r.runtime_s},
          {"batches", batches}};
}

selection::RunRecord record_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kCorruptRecord, "record is not an object");
  if (!j.contains("schema_version")) throw Error(ErrorCode::kCorruptRecord, "missing schema_version");
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion)
      throw Error(ErrorCode::kSchemaVersionMismatch,
                  "schema_version " + std::to_string(version) + ", expected " + std::to_string(kSchemaVersion));
    selection::RunRecord r;
    r.method = j.at("method").get<std::string>();
    r.protocol = j.at("protocol").get<std::string>();
    r.stream_id = j.at("stream_id").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.learning_rate = j.at("learning_rate").get<double>();
    r.steps = j.at("steps").get<std::size_t>();
    r.stream_error = j.at("stream_error").get<double>();
    r.runtime_s = j.at("runtime_s").get<double>();
    for (const json& b : j.at("batches")) {
      selection::BatchEntry e;
      e.batch_index = b.at("batch_index").get<std::size_t>();
      e.slot_id = b.at("slot_id").get<std::size_t>();
      e.size = b.at("size").get<std::size_t>();
      e.accuracy = b.at("accuracy").get<double>();
      e.mean_entropy = b.at("mean_entropy").get<double>();
      e.loss = b.at("loss").get<double>();
      e.selected_step = b.at("selected_step").get<int>();
      r.batches.push_back(e);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, e.what());
  }
}

void persist_records(const std::filesystem::path& path, std::span<const selection::RunRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<selection::RunRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<selection::RunRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    const std::string where = path.string() + ":" + std::to_string(number);
    if (j.is_discarded()) throw Error(ErrorCode::kCorruptRecord, where + ": not valid JSON");
    try {
      out.push_back(record_from_json(j));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tta::harness
