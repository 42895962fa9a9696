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

// Corpus-level multi-reference BLEU-4.

#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <span>
#include <vector>

#include "stylegen/error.hpp"
#include "stylegen/text.hpp"

namespace stylegen {

struct BleuStats {
  std::array<std::int64_t, 4> matches{};  // clipped n-gram matches, n = 1..4
  std::array<std::int64_t, 4> totals{};   // hypothesis n-grams
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;               // sum of closest reference lengths

  BleuStats& operator+=(const BleuStats& o) {
    for (std::size_t n = 0; n < 4; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
};

struct BleuResult {
  double score = 0.0;                // 0..100
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  BleuStats stats;
};

namespace detail {

using NgramCounts = std::map<std::vector<std::string>, std::int64_t>;

inline NgramCounts ngram_counts(const TokenSequence& toks, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

}  // namespace detail

/// Sufficient statistics for one hypothesis against its reference set.
/// Counts are clipped by the maximum count in any single reference; the
/// reference length is the closest one (shorter wins ties).
inline BleuStats bleu_sentence_stats(const TokenSequence& hyp, std::span<const TokenSequence> refs) {
  if (refs.empty()) throw EmptyCorpus();
  BleuStats s;
  s.hyp_len = static_cast<std::int64_t>(hyp.size());
  std::int64_t best = -1;
  for (const auto& r : refs) {
    const auto len = static_cast<std::int64_t>(r.size());
    const auto diff = std::llabs(len - s.hyp_len);
    if (best < 0 || diff < std::llabs(best - s.hyp_len) || (diff == std::llabs(best - s.hyp_len) && len < best))
      best = len;
  }
  s.ref_len = best;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto hc = detail::ngram_counts(hyp, n);
    detail::NgramCounts max_ref;
    for (const auto& r : refs)
      for (const auto& [g, c] : detail::ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], c);
    for (const auto& [g, c] : hc) {
      s.totals[n - 1] += c;
      if (auto it = max_ref.find(g); it != max_ref.end()) s.matches[n - 1] += std::min(c, it->second);
    }
  }
  return s;
}

/// Geometric mean of the four modified precisions times the brevity
/// penalty. Unsmoothed by default, so any zero precision yields 0. Orders
/// for which the hypotheses contain no n-grams at all (outputs shorter than
/// n tokens) are left out of the mean rather than zeroing the score.
/// `smooth` adds one to numerator and denominator for n >= 2.
inline BleuResult bleu_from_stats(const BleuStats& s, bool smooth = false) {
  BleuResult r;
  r.stats = s;
  double log_sum = 0.0;
  bool zero = false;
  int orders = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    double num = static_cast<double>(s.matches[n]);
    double den = static_cast<double>(s.totals[n]);
    if (smooth && n > 0) {
      num += 1.0;
      den += 1.0;
    }
    if (den == 0) continue;  // no n-grams of this order at all (very short output)
    ++orders;
    r.precisions[n] = num / den;
    if (r.precisions[n] <= 0.0) zero = true;
    else log_sum += std::log(r.precisions[n]);
  }
  if (orders == 0) zero = true;
  if (s.hyp_len == 0) r.brevity_penalty = 0.0;
  else if (s.hyp_len > s.ref_len) r.brevity_penalty = 1.0;
  else r.brevity_penalty = std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
  r.score = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / orders);
  return r;
}

inline BleuResult bleu(std::span<const TokenSequence> outputs, std::span<const std::vector<TokenSequence>> references,
                       bool smooth = false) {
  if (outputs.empty()) throw EmptyCorpus();
  if (outputs.size() != references.size())
    throw ShapeMismatch("bleu: " + std::to_string(outputs.size()) + " outputs but " +
                        std::to_string(references.size()) + " reference sets");
  BleuStats total;
  for (std::size_t i = 0; i < outputs.size(); ++i) total += bleu_sentence_stats(outputs[i], references[i]);
  return bleu_from_stats(total, smooth);
}

}  // namespace stylegen
