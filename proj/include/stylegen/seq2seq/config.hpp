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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "stylegen/error.hpp"
#include "stylegen/mr.hpp"

namespace stylegen {

/// Where the side constraint enters the model.
///   kNoCon: ignored
///   kM1: pseudo slot-value tokens prepended to the MR
///   kM2: constraint vector appended to every slot-value encoding
///   kM3: constraint vector appended to every decoder input
enum class Method : std::uint8_t { kNoCon, kM1, kM2, kM3 };

enum class Task : std::uint8_t { kPersonality, kContrast };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kNoCon: return "nocon";
    case Method::kM1: return "m1";
    case Method::kM2: return "m2";
    case Method::kM3: return "m3";
  }
  return "?";
}
inline std::string_view to_string(Granularity g) { return g == Granularity::kFine ? "fine" : "coarse"; }
inline std::string_view to_string(Task t) { return t == Task::kContrast ? "contrast" : "personality"; }

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::kNoCon, Method::kM1, Method::kM2, Method::kM3})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected nocon, m1, m2 or m3)");
}
inline Granularity parse_granularity(std::string_view s) {
  if (s == "coarse") return Granularity::kCoarse;
  if (s == "fine") return Granularity::kFine;
  throw ConfigError("unknown granularity '" + std::string(s) + "' (expected coarse or fine)");
}
inline Task parse_task(std::string_view s) {
  if (s == "personality") return Task::kPersonality;
  if (s == "contrast") return Task::kContrast;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected personality or contrast)");
}

struct ModelConfig {
  int rnn_layers = 1;
  int rnn_size = 200;
  int embed_size = 64;
  Method method = Method::kM3;
  Granularity granularity = Granularity::kCoarse;
  Task task = Task::kPersonality;
  double dropout_p = 0.1;
  int beam_width = 3;
  int batch_size = 128;
  bool length_norm = true;

  /// Width of the encoded constraint vector (0 when unused).
  std::size_t constraint_dim() const {
    if (method == Method::kNoCon || method == Method::kM1) return 0;
    if (task == Task::kContrast) return 1;
    return granularity == Granularity::kFine ? kNumPersonalities + kNumStyleParams : kNumPersonalities;
  }

  void validate() const {
    if (rnn_layers < 1 || rnn_layers > 2) throw ConfigError("rnn_layers must be 1 or 2");
    if (rnn_size < 1) throw ConfigError("rnn_size must be positive");
    if (embed_size < 1) throw ConfigError("embed_size must be positive");
    if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must be in [0, 1)");
  }

  std::map<std::string, std::string> to_kv() const {
    std::ostringstream dp;
    dp.precision(17);
    dp << dropout_p;
    return {{"rnn_layers", std::to_string(rnn_layers)},
            {"rnn_size", std::to_string(rnn_size)},
            {"embed_size", std::to_string(embed_size)},
            {"method", std::string(to_string(method))},
            {"granularity", std::string(to_string(granularity))},
            {"task", std::string(to_string(task))},
            {"dropout_p", dp.str()},
            {"beam_width", std::to_string(beam_width)},
            {"batch_size", std::to_string(batch_size)},
            {"length_norm", length_norm ? "1" : "0"}};
  }

  static ModelConfig from_kv(const std::map<std::string, std::string>& kv) {
    ModelConfig c;
    auto get = [&](const char* k) -> const std::string& {
      auto it = kv.find(k);
      if (it == kv.end()) throw DataError(std::string("model config missing key '") + k + "'");
      return it->second;
    };
    c.rnn_layers = std::stoi(get("rnn_layers"));
    c.rnn_size = std::stoi(get("rnn_size"));
    c.embed_size = std::stoi(get("embed_size"));
    c.method = parse_method(get("method"));
    c.granularity = parse_granularity(get("granularity"));
    c.task = parse_task(get("task"));
    c.dropout_p = std::stod(get("dropout_p"));
    c.beam_width = std::stoi(get("beam_width"));
    c.batch_size = std::stoi(get("batch_size"));
    c.length_norm = get("length_norm") == "1";
    return c;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Optimization settings. The learning-rate schedule halves the rate after
/// any epoch whose dev perplexity fails to improve.
struct TrainConfig {
  double learning_rate = 1.0;
  std::optional<double> clip_norm = 5.0;
  int max_epochs = 50;
  bool halve_on_plateau = true;
  int patience = 0;  // stop after this many non-improving epochs; 0 disables
  std::uint64_t seed = 1;
};

}  // namespace stylegen
