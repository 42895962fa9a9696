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

#include <string>
#include <vector>

#include "stylegen/mr.hpp"
#include "stylegen/seq2seq/config.hpp"

namespace stylegen {

inline constexpr const char* kSideConstraintSlot = "side-constraint";

/// Encoded side constraint: 5-way personality one-hot, optionally followed
/// by the 36 style bits, or a single contrast bit.
struct ConstraintVector {
  std::vector<double> values;
  std::size_t size() const noexcept { return values.size(); }
};

inline ConstraintVector encode_constraint(const StyleConstraint& c, Task task, Granularity g) {
  ConstraintVector out;
  if (task == Task::kContrast) {
    out.values.assign(1, 0.0);
    if (c.kind() == StyleConstraint::Kind::kContrast && *c.contrast_flag()) out.values[0] = 1.0;
    return out;
  }
  out.values.assign(g == Granularity::kFine ? kNumPersonalities + kNumStyleParams : kNumPersonalities, 0.0);
  if (c.kind() != StyleConstraint::Kind::kPersonality) return out;
  validate_constraint(c, g);
  out.values[static_cast<std::size_t>(*c.personality_label())] = 1.0;
  if (g == Granularity::kFine)
    for (std::size_t k = 0; k < kNumStyleParams; ++k)
      out.values[kNumPersonalities + k] = (*c.fine_params())[k] ? 1.0 : 0.0;
  return out;
}

inline std::string style_param_slot(std::size_t k) { return "param_" + std::to_string(k); }

/// Method 1: the constraint becomes extra slot-value pairs at the front of
/// the MR. Fine control adds the 36 `param_k` slots ahead of the
/// side-constraint slot.
inline MeaningRepresentation apply_method1(const MeaningRepresentation& mr, const StyleConstraint& c,
                                           Granularity g) {
  if (c.kind() == StyleConstraint::Kind::kNone) return mr;
  MeaningRepresentation out;
  if (c.kind() == StyleConstraint::Kind::kContrast) {
    out.slots.push_back({kSideConstraintSlot, *c.contrast_flag() ? "contrast" : "no-contrast"});
  } else {
    validate_constraint(c, g);
    if (g == Granularity::kFine)
      for (std::size_t k = 0; k < kNumStyleParams; ++k)
        out.slots.push_back({style_param_slot(k), (*c.fine_params())[k] ? "1" : "0"});
    out.slots.push_back({kSideConstraintSlot, std::string(to_string(*c.personality_label()))});
  }
  out.slots.insert(out.slots.end(), mr.slots.begin(), mr.slots.end());
  return out;
}

}  // namespace stylegen
