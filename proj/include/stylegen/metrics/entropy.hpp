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

// Shannon entropy over one pooled distribution of unigrams, bigrams and
// trigrams.

#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stylegen/error.hpp"
#include "stylegen/text.hpp"

namespace stylegen {

struct NgramStats {
  std::map<std::vector<std::string>, std::int64_t> counts;
  std::int64_t total = 0;

  void add(const TokenSequence& toks, std::size_t max_order = 3) {
    for (std::size_t n = 1; n <= max_order; ++n)
      for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                          toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
        ++total;
      }
  }

  NgramStats& operator+=(const NgramStats& o) {
    for (const auto& [g, c] : o.counts) counts[g] += c;
    total += o.total;
    return *this;
  }
};

inline NgramStats ngram_stats(std::span<const TokenSequence> corpus, std::size_t max_order = 3) {
  NgramStats s;
  for (const auto& t : corpus) s.add(t, max_order);
  return s;
}

inline double entropy(const NgramStats& s) {
  if (s.total == 0) return 0.0;
  const double n = static_cast<double>(s.total);
  double h = 0.0;
  for (const auto& [_, k] : s.counts) {
    const double p = static_cast<double>(k) / n;
    h -= p * std::log2(p);
  }
  return h;
}

/// Entropy in bits of the corpus' pooled 1..3-gram distribution.
inline double entropy(std::span<const TokenSequence> corpus) {
  if (corpus.empty()) throw EmptyCorpus();
  return entropy(ngram_stats(corpus));
}

}  // namespace stylegen
