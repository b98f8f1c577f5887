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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tta {

// Opaque, versioned blob owned by whichever adaptation method wrote it.
struct AuxState {
  std::uint32_t version = 0;
  std::string blob;

  bool empty() const { return blob.empty(); }
  bool operator==(const AuxState&) const = default;
};

// Complete value snapshot of a model plus method-owned state.
struct ModelState {
  std::string version_tag;
  std::map<std::string, std::vector<double>> parameters;
  std::map<std::string, std::vector<double>> running_stats;
  AuxState aux_state;

  std::size_t byte_size() const;
  bool operator==(const ModelState&) const = default;
};

// Little-endian binary encoder used for state files and aux blobs.
class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f64(double v);
  void put_string(std::string_view s);
  void put_doubles(std::span<const double> values);
  void put_sizes(std::span<const std::size_t> values);

  const std::string& bytes() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : in_(bytes) {}

  std::uint8_t get_u8();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  double get_f64();
  std::string get_string();
  std::vector<double> get_doubles();
  std::vector<std::size_t> get_sizes();

  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const;

  std::string_view in_;
  std::size_t pos_ = 0;
};

std::string encode_model_state(const ModelState& state);
ModelState decode_model_state(std::string_view bytes);

void save_model_state(const std::filesystem::path& path, const ModelState& state);
ModelState load_model_state(const std::filesystem::path& path);

}  // namespace tta
