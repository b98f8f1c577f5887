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

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "tta/selection/selection.hpp"

namespace tta::harness {

inline constexpr int kSchemaVersion = 1;

nlohmann::json record_to_json(const selection::RunRecord& r);
// CorruptRecord on missing or mistyped fields, SchemaVersionMismatch on another version.
selection::RunRecord record_from_json(const nlohmann::json& j);

// One JSON object per line.
void persist_records(const std::filesystem::path& path, std::span<const selection::RunRecord> records);
// Errors name the 1-based line.
std::vector<selection::RunRecord> load_records(const std::filesystem::path& path);

}  // namespace tta::harness
