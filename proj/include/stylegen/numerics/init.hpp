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

#include <cmath>

#include "stylegen/numerics/array.hpp"
#include "stylegen/numerics/rng.hpp"

namespace stylegen {

/// Uniform on +-sqrt(6 / (fan_in + fan_out)). Fans come from the last two
/// dimensions; a vector has fan_out = 1.
inline Array glorot_init(const Shape& shape, RngState& rng) {
  if (shape.empty()) throw ShapeMismatch("glorot_init: shape needs at least one dimension");
  const double fan_in = static_cast<double>(shape.size() >= 2 ? shape[shape.size() - 2] : shape[0]);
  const double fan_out = static_cast<double>(shape.size() >= 2 ? shape.back() : 1);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Array out(shape);
  for (auto& v : out.storage()) v = rng.uniform(-bound, bound);
  return out;
}

}  // namespace stylegen
