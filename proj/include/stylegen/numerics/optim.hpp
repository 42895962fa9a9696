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
#include <optional>
#include <span>

#include "stylegen/numerics/autodiff.hpp"

namespace stylegen {

inline double global_grad_norm(std::span<ad::Parameter* const> params) {
  double sq = 0.0;
  for (const auto* p : params)
    for (double g : p->grad.values()) sq += g * g;
  return std::sqrt(sq);
}

/// p <- p - lr * g, with gradients rescaled so their global L2 norm is at
/// most `clip`. Gradients are zeroed afterwards. Returns the pre-clip norm.
inline double sgd_step(std::span<ad::Parameter* const> params, double lr,
                       std::optional<double> clip = std::nullopt) {
  const double norm = global_grad_norm(params);
  double factor = 1.0;
  if (clip && norm > *clip) factor = *clip / norm;
  for (auto* p : params) {
    auto& v = p->value.storage();
    auto& g = p->grad.storage();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * factor * g[i];
    p->zero_grad();
  }
  return norm;
}

}  // namespace stylegen
