// Copyright 2026 The Stylegen Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Checkpoint container. All integers are little-endian.
//
//   magic     8 bytes  "SGCKPT\0\1"
//   version   u32      (= 1)
//   header    u32 length + UTF-8 text, one "key=value" per line, sorted by
//             key. Keys prefixed "model." hold the ModelConfig, "vocab."
//             the hex FNV-1a hash of each vocabulary file, "meta." lineage
//             (seed, config hash, ...), "sizes." the vocabulary sizes.
//   count     u32      number of parameter blobs
//   blob      u32 name length, name bytes, u32 ndim, ndim x u64 dims,
//             prod(dims) x f64 (IEEE-754 binary64), row-major
//
// Blobs are written in lexicographic name order, so equal models give
// byte-identical files.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stylegen/error.hpp"
#include "stylegen/seq2seq/model.hpp"

namespace stylegen {

inline constexpr char kCheckpointMagic[8] = {'S', 'G', 'C', 'K', 'P', 'T', '\0', '\1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  VocabSizes sizes;
  std::map<std::string, std::string> vocab_hashes;  // vocab name -> hex hash
  std::map<std::string, std::string> meta;
  ModelParams params;
};

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) { put_le(out, std::bit_cast<std::uint64_t>(d)); }

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <typename T>
  T le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw DataError("checkpoint truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::map<std::string, std::string> header;
  for (const auto& [k, v] : ck.config.to_kv()) header["model." + k] = v;
  for (const auto& [k, v] : ck.vocab_hashes) header["vocab." + k] = v;
  for (const auto& [k, v] : ck.meta) header["meta." + k] = v;
  header["sizes.slot_types"] = std::to_string(ck.sizes.slot_types);
  header["sizes.slot_values"] = std::to_string(ck.sizes.slot_values);
  header["sizes.target"] = std::to_string(ck.sizes.target);
  std::string text;
  for (const auto& [k, v] : header) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos || v.find('\n') != std::string::npos)
      throw DataError("checkpoint header entries may not contain '=' in keys or newlines");
    text += k + "=" + v + "\n";
  }

  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, p] : ck.params) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.ndim()));
    for (auto d : p.value.shape()) detail::put_le<std::uint64_t>(out, d);
    for (double v : p.value.values()) detail::put_f64(out, v);
  }
  return out;
}

inline Checkpoint deserialize_checkpoint(std::string_view data) {
  detail::Reader in(data);
  if (in.bytes(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic))
    throw DataError("not a checkpoint file (bad magic)");
  if (const auto v = in.le<std::uint32_t>(); v != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(v));
  const std::string text = in.bytes(in.le<std::uint32_t>());
  Checkpoint ck;
  std::map<std::string, std::string> model_kv;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("bad checkpoint header line: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    auto strip = [&](std::string_view prefix) { return key.substr(prefix.size()); };
    if (key.rfind("model.", 0) == 0) model_kv[strip("model.")] = value;
    else if (key.rfind("vocab.", 0) == 0) ck.vocab_hashes[strip("vocab.")] = value;
    else if (key.rfind("meta.", 0) == 0) ck.meta[strip("meta.")] = value;
    else if (key == "sizes.slot_types") ck.sizes.slot_types = std::stoull(value);
    else if (key == "sizes.slot_values") ck.sizes.slot_values = std::stoull(value);
    else if (key == "sizes.target") ck.sizes.target = std::stoull(value);
  }
  ck.config = ModelConfig::from_kv(model_kv);
  const auto count = in.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = in.bytes(in.le<std::uint32_t>());
    const auto ndim = in.le<std::uint32_t>();
    Shape shape(ndim);
    for (auto& d : shape) d = in.le<std::uint64_t>();
    Array value(shape);
    for (auto& v : value.storage()) v = in.f64();
    ck.params.emplace(name, ad::Parameter(name, std::move(value)));
  }
  if (!in.done()) throw DataError("trailing bytes after checkpoint");
  return ck;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw DataError("write failed: " + path);
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) { write_file(path, serialize_checkpoint(ck)); }
inline Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace stylegen
