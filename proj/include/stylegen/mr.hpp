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

// Meaning representations, style constraints and dataset records.
//
// An MR is written as a comma-separated list of `slot[value]` items, e.g.
//
//   name[Browns Cambridge], eatType[coffee shop], near[Crowne Plaza Hotel]
//
// Slot order is preserved and values are kept case-sensitive; lowercasing
// happens in the text pipeline.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stylegen/error.hpp"

namespace stylegen {

struct SlotValue {
  std::string slot_type;
  std::string slot_value;

  friend bool operator==(const SlotValue&, const SlotValue&) = default;
};

struct MeaningRepresentation {
  std::vector<SlotValue> slots;

  std::size_t size() const noexcept { return slots.size(); }
  const SlotValue* find(std::string_view slot_type) const {
    for (const auto& s : slots)
      if (s.slot_type == slot_type) return &s;
    return nullptr;
  }

  friend bool operator==(const MeaningRepresentation&,
                         const MeaningRepresentation&) = default;
};

enum class Personality : std::uint8_t {
  kAgreeable = 0,
  kDisagreeable,
  kConscientious,
  kUnconscientious,
  kExtravert,
};

inline constexpr std::size_t kNumPersonalities = 5;
inline constexpr std::size_t kNumStyleParams = 36;

inline constexpr std::array<Personality, kNumPersonalities> kAllPersonalities = {
    Personality::kAgreeable, Personality::kDisagreeable,
    Personality::kConscientious, Personality::kUnconscientious,
    Personality::kExtravert};

inline std::string_view to_string(Personality p) {
  switch (p) {
    case Personality::kAgreeable: return "agreeable";
    case Personality::kDisagreeable: return "disagreeable";
    case Personality::kConscientious: return "conscientious";
    case Personality::kUnconscientious: return "unconscientious";
    case Personality::kExtravert: return "extravert";
  }
  return "?";
}

/// Accepts the canonical lowercase names, case-insensitively, plus the
/// "extrovert" spelling.
inline std::optional<Personality> parse_personality(std::string_view s) {
  std::string lower(s);
  for (auto& ch : lower)
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  if (lower == "extrovert") return Personality::kExtravert;
  for (auto p : kAllPersonalities)
    if (lower == to_string(p)) return p;
  return std::nullopt;
}

enum class Granularity : std::uint8_t { kCoarse, kFine };

/// Side constraint before encoding. Only the three factories can build one,
/// so the kind/optional-field invariants always hold.
class StyleConstraint {
 public:
  enum class Kind : std::uint8_t { kNone, kPersonality, kContrast };

  StyleConstraint() = default;

  static StyleConstraint none() { return {}; }
  static StyleConstraint personality(
      Personality p, std::optional<std::vector<std::uint8_t>> fine = std::nullopt) {
    StyleConstraint c;
    c.kind_ = Kind::kPersonality;
    c.personality_ = p;
    c.fine_params_ = std::move(fine);
    return c;
  }
  static StyleConstraint contrast(bool on) {
    StyleConstraint c;
    c.kind_ = Kind::kContrast;
    c.contrast_ = on;
    return c;
  }

  Kind kind() const noexcept { return kind_; }
  const std::optional<Personality>& personality_label() const noexcept {
    return personality_;
  }
  const std::optional<std::vector<std::uint8_t>>& fine_params() const noexcept {
    return fine_params_;
  }
  const std::optional<bool>& contrast_flag() const noexcept { return contrast_; }

  /// Same constraint with fine parameters dropped (coarse view).
  StyleConstraint coarsened() const {
    StyleConstraint c = *this;
    c.fine_params_.reset();
    return c;
  }

  friend bool operator==(const StyleConstraint&, const StyleConstraint&) = default;

 private:
  Kind kind_ = Kind::kNone;
  std::optional<Personality> personality_;
  std::optional<std::vector<std::uint8_t>> fine_params_;
  std::optional<bool> contrast_;
};

struct DatasetRecord {
  MeaningRepresentation mr;
  StyleConstraint constraint;
  std::vector<std::string> references;
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline MeaningRepresentation parse_mr(std::string_view text) {
  MeaningRepresentation mr;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto skip_ws = [&] {
    while (i < n && detail::is_space(text[i])) ++i;
  };

  skip_ws();
  if (i == n) throw MalformedMR("empty MR", i);
  while (true) {
    skip_ws();
    const std::size_t type_begin = i;
    while (i < n && text[i] != '[' && text[i] != ',' && text[i] != ']') ++i;
    if (i == n || text[i] != '[') throw MalformedMR("expected '['", i);
    const std::string_view type = detail::trim(text.substr(type_begin, i - type_begin));
    if (type.empty()) throw MalformedMR("empty slot type", type_begin);
    ++i;  // '['
    const std::size_t value_begin = i;
    while (i < n && text[i] != ']') ++i;
    if (i == n) throw MalformedMR("missing ']'", i);
    const std::string_view value = text.substr(value_begin, i - value_begin);
    if (value.empty()) throw MalformedMR("empty slot value", value_begin);
    if (mr.find(type) != nullptr)
      throw MalformedMR("duplicate slot type '" + std::string(type) + "'", type_begin);
    mr.slots.push_back({std::string(type), std::string(value)});
    ++i;  // ']'
    skip_ws();
    if (i == n) break;
    if (text[i] != ',') throw MalformedMR("expected ',' or end of input", i);
    ++i;
  }
  return mr;
}

inline std::string serialize_mr(const MeaningRepresentation& mr) {
  std::string out;
  for (std::size_t k = 0; k < mr.slots.size(); ++k) {
    if (k) out += ", ";
    out += mr.slots[k].slot_type;
    out += '[';
    out += mr.slots[k].slot_value;
    out += ']';
  }
  return out;
}

inline const StyleConstraint& validate_constraint(const StyleConstraint& c,
                                                  Granularity mode) {
  if (c.kind() != StyleConstraint::Kind::kPersonality) return c;
  const auto& fine = c.fine_params();
  if (mode == Granularity::kFine) {
    if (!fine)
      throw ConstraintModeMismatch("fine control requires 36 style parameters");
    if (fine->size() != kNumStyleParams)
      throw ConstraintModeMismatch("fine control requires exactly 36 style parameters, got " +
                                   std::to_string(fine->size()));
  } else if (fine) {
    throw ConstraintModeMismatch("coarse control does not take style parameters");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Line-delimited JSON records:
//   {"mr": "...", "style": {"personality": str|null, "params": [36 x 0/1]|null,
//    "contrast": bool|null}, "refs": ["..."]}

inline nlohmann::json style_to_json(const StyleConstraint& c) {
  nlohmann::json style = {{"personality", nullptr}, {"params", nullptr}, {"contrast", nullptr}};
  if (c.personality_label()) style["personality"] = std::string(to_string(*c.personality_label()));
  if (c.fine_params()) {
    nlohmann::json bits = nlohmann::json::array();
    for (auto b : *c.fine_params()) bits.push_back(static_cast<int>(b));
    style["params"] = bits;
  }
  if (c.contrast_flag()) style["contrast"] = *c.contrast_flag();
  return style;
}

/// Throws std::invalid_argument on schema violations; callers attach line numbers.
inline StyleConstraint style_from_json(const nlohmann::json& style) {
  if (style.is_null()) return StyleConstraint::none();
  if (!style.is_object()) throw std::invalid_argument("'style' must be an object");
  auto field = [&](const char* key) -> const nlohmann::json* {
    auto it = style.find(key);
    if (it == style.end() || it->is_null()) return nullptr;
    return &*it;
  };
  const auto* pers = field("personality");
  const auto* params = field("params");
  const auto* contrast = field("contrast");
  if (contrast) {
    if (pers || params) throw std::invalid_argument("contrast constraint cannot carry a personality");
    if (!contrast->is_boolean()) throw std::invalid_argument("'contrast' must be boolean");
    return StyleConstraint::contrast(contrast->get<bool>());
  }
  if (pers) {
    if (!pers->is_string()) throw std::invalid_argument("'personality' must be a string");
    auto p = parse_personality(pers->get<std::string>());
    if (!p) throw UnknownPersonalityLabel(pers->get<std::string>());
    std::optional<std::vector<std::uint8_t>> bits;
    if (params) {
      if (!params->is_array() || params->size() != kNumStyleParams)
        throw std::invalid_argument("'params' must be an array of 36 integers");
      bits.emplace();
      for (const auto& b : *params) {
        if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1))
          throw std::invalid_argument("'params' entries must be 0 or 1");
        bits->push_back(static_cast<std::uint8_t>(b.get<int>()));
      }
    }
    return StyleConstraint::personality(*p, std::move(bits));
  }
  if (params) throw std::invalid_argument("'params' given without a personality");
  return StyleConstraint::none();
}

inline std::string record_to_json_line(const DatasetRecord& r) {
  nlohmann::json j;
  j["mr"] = serialize_mr(r.mr);
  j["style"] = style_to_json(r.constraint);
  j["refs"] = r.references;
  return j.dump();
}

inline DatasetRecord record_from_json_line(std::string_view line, std::size_t line_no) {
  try {
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw std::invalid_argument("record must be a JSON object");
    if (!j.contains("mr") || !j["mr"].is_string()) throw std::invalid_argument("missing string field 'mr'");
    DatasetRecord r;
    r.mr = parse_mr(j["mr"].get<std::string>());
    r.constraint = style_from_json(j.contains("style") ? j["style"] : nlohmann::json());
    if (!j.contains("refs") || !j["refs"].is_array() || j["refs"].empty())
      throw std::invalid_argument("'refs' must be a non-empty array");
    for (const auto& ref : j["refs"]) {
      if (!ref.is_string()) throw std::invalid_argument("'refs' entries must be strings");
      r.references.push_back(ref.get<std::string>());
    }
    return r;
  } catch (const MalformedMR& e) {
    throw MalformedRecord(e.what(), line_no);
  } catch (const UnknownPersonalityLabel& e) {
    throw MalformedRecord(e.what(), line_no);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(e.what(), line_no);
  } catch (const std::invalid_argument& e) {
    throw MalformedRecord(e.what(), line_no);
  }
}

}  // namespace stylegen
