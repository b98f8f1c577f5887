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

#include "tta/core/model_state.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "tta/core/error.hpp"

namespace tta {

namespace {

constexpr std::string_view kMagic = "TTASTATE";
constexpr std::uint32_t kFormatVersion = 1;

void put_array_map(ByteWriter& w, const std::map<std::string, std::vector<double>>& m) {
  w.put_u64(m.size());
  for (const auto& [name, values] : m) {
    w.put_string(name);
    w.put_doubles(values);
  }
}

std::map<std::string, std::vector<double>> get_array_map(ByteReader& r) {
  std::map<std::string, std::vector<double>> m;
  const auto count = r.get_u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    auto name = r.get_string();
    m.emplace(std::move(name), r.get_doubles());
  }
  return m;
}

}  // namespace

std::size_t ModelState::byte_size() const {
  std::size_t total = version_tag.size() + aux_state.blob.size();
  for (const auto& [name, v] : parameters) total += name.size() + v.size() * sizeof(double);
  for (const auto& [name, v] : running_stats) total += name.size() + v.size() * sizeof(double);
  return total;
}

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_string(std::string_view s) {
  put_u64(s.size());
  out_.append(s);
}

void ByteWriter::put_doubles(std::span<const double> values) {
  put_u64(values.size());
  for (double v : values) put_f64(v);
}

void ByteWriter::put_sizes(std::span<const std::size_t> values) {
  put_u64(values.size());
  for (auto v : values) put_u64(v);
}

void ByteReader::need(std::size_t n) const {
  if (in_.size() - pos_ < n) throw Error(ErrorCode::kIoError, "truncated binary data");
}

std::uint8_t ByteReader::get_u8() {
  need(1);
  return static_cast<std::uint8_t>(in_[pos_++]);
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
  return v;
}

std::uint64_t ByteReader::get_u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
  return v;
}

double ByteReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::string ByteReader::get_string() {
  const auto n = get_u64();
  need(n);
  std::string s(in_.substr(pos_, n));
  pos_ += n;
  return s;
}

std::vector<double> ByteReader::get_doubles() {
  const auto n = get_u64();
  need(n * 8);
  std::vector<double> v(n);
  for (auto& x : v) x = get_f64();
  return v;
}

std::vector<std::size_t> ByteReader::get_sizes() {
  const auto n = get_u64();
  need(n * 8);
  std::vector<std::size_t> v(n);
  for (auto& x : v) x = get_u64();
  return v;
}

std::string encode_model_state(const ModelState& state) {
  ByteWriter w;
  for (char c : kMagic) w.put_u8(static_cast<std::uint8_t>(c));
  w.put_u32(kFormatVersion);
  w.put_string(state.version_tag);
  put_array_map(w, state.parameters);
  put_array_map(w, state.running_stats);
  w.put_u32(state.aux_state.version);
  w.put_string(state.aux_state.blob);
  return w.take();
}

ModelState decode_model_state(std::string_view bytes) {
  ByteReader r(bytes);
  for (char c : kMagic) {
    if (r.get_u8() != static_cast<std::uint8_t>(c)) throw Error(ErrorCode::kIoError, "not a model state container");
  }
  const auto format = r.get_u32();
  if (format != kFormatVersion) {
    throw Error(ErrorCode::kSchemaVersionMismatch, "model state format " + std::to_string(format));
  }
  ModelState state;
  state.version_tag = r.get_string();
  state.parameters = get_array_map(r);
  state.running_stats = get_array_map(r);
  state.aux_state.version = r.get_u32();
  state.aux_state.blob = r.get_string();
  if (!r.done()) throw Error(ErrorCode::kIoError, "trailing bytes in model state container");
  return state;
}

void save_model_state(const std::filesystem::path& path, const ModelState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  const auto bytes = encode_model_state(state);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

ModelState load_model_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingCheckpoint, path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model_state(bytes);
}

}  // namespace tta
