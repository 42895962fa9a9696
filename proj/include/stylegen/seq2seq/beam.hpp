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

#include <algorithm>
#include <vector>

#include "stylegen/seq2seq/model.hpp"

namespace stylegen {

struct BeamResult {
  std::vector<int> tokens;  // without BOS/EOS
  double log_prob = 0.0;
  double score = 0.0;       // log_prob / length when length-normalized
  bool finished = true;     // false: no hypothesis reached EOS within max_len
};

namespace detail {

struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0.0;
  std::size_t parent = 0;
};

inline double beam_score(const Hypothesis& h, bool finished, bool length_norm) {
  if (!length_norm) return h.log_prob;
  const std::size_t len = h.tokens.size() + (finished ? 1 : 0);
  return h.log_prob / static_cast<double>(std::max<std::size_t>(len, 1));
}

// Higher score first; equal scores prefer the lexicographically lower ids.
inline bool better(double sa, const std::vector<int>& ta, double sb, const std::vector<int>& tb) {
  if (sa != sb) return sa > sb;
  return ta < tb;
}

}  // namespace detail

/// Beam search over one example. Each step keeps the `beam_width` best
/// expansions by cumulative log-probability; the ones ending in EOS retire
/// to the finished pool. Search stops when the best expansion of a step is
/// EOS, the live beam empties, or `max_len` tokens were produced (stopping
/// after k finished hypotheses instead can drop a better live one). The
/// answer is the finished hypothesis with the best length-normalized score.
/// beam_width = 1 is greedy decoding.
inline BeamResult beam_generate(Seq2Seq& model, const Example& ex, int beam_width, std::size_t max_len) {
  if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
  const bool length_norm = model.config().length_norm;
  ad::Graph g(false);
  const Example* one[] = {&ex};
  EncoderStates enc = model.encode(g, one, false, nullptr);
  DecoderState state = model.initial_state(g, enc);
  const Array crow1 = model.constraint_rows(one);

  std::vector<detail::Hypothesis> live = {{}};
  std::vector<detail::Hypothesis> finished;
  const std::size_t k = static_cast<std::size_t>(beam_width);

  bool best_finished = false;
  for (std::size_t step = 0; step < max_len && !live.empty() && !best_finished; ++step) {
    const std::size_t rows = live.size();
    std::vector<std::size_t> parents(rows);
    std::vector<int> prev(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      parents[r] = live[r].parent;
      prev[r] = live[r].tokens.empty() ? kBosId : live[r].tokens.back();
    }
    // Reorder the recurrent state to follow the surviving hypotheses.
    if (step > 0) {
      for (auto& v : state.h) v = ad::gather_rows(v, parents);
      for (auto& v : state.c) v = ad::gather_rows(v, parents);
      state.context = ad::gather_rows(state.context, parents);
    }
    EncoderStates enc_rows = enc;
    if (enc.states.rows() != rows) {
      std::vector<std::size_t> zeros(rows, 0);
      enc_rows.states = ad::gather_rows(enc.states, zeros);
    }
    Array crow;
    if (!crow1.empty()) {
      crow = Array::matrix(rows, crow1.cols());
      for (std::size_t r = 0; r < rows; ++r) std::copy_n(crow1.data(), crow1.cols(), crow.data() + r * crow1.cols());
    }
    auto out = model.decode_step(g, enc_rows, state, prev, crow.empty() ? nullptr : &crow, false, nullptr);
    const Array& lp = ad::log_softmax(out.logits).value();
    const std::size_t vocab = lp.cols();

    struct Cand {
      double score;
      std::size_t row;
      int token;
    };
    std::vector<Cand> cands;
    cands.reserve(rows * vocab);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t v = 0; v < vocab; ++v) {
        const int tok = static_cast<int>(v);
        if (tok == kPadId || tok == kBosId) continue;
        cands.push_back({live[r].log_prob + lp[r * vocab + v], r, tok});
      }
    // Rank by cumulative log-probability; ties fall back to token order.
    std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (live[a.row].tokens != live[b.row].tokens) return live[a.row].tokens < live[b.row].tokens;
      return a.token < b.token;
    });

    best_finished = !cands.empty() && cands.front().token == kEosId;
    std::vector<detail::Hypothesis> next;
    for (std::size_t c = 0; c < std::min(k, cands.size()); ++c) {
      detail::Hypothesis h;
      h.tokens = live[cands[c].row].tokens;
      h.log_prob = cands[c].score;
      h.parent = cands[c].row;
      if (cands[c].token == kEosId) {
        finished.push_back(std::move(h));
      } else {
        h.tokens.push_back(cands[c].token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
    state = std::move(out.state);
  }

  auto pick = [&](const std::vector<detail::Hypothesis>& pool, bool done) {
    const detail::Hypothesis* best = nullptr;
    double best_score = 0.0;
    for (const auto& h : pool) {
      const double s = detail::beam_score(h, done, length_norm);
      if (!best || detail::better(s, h.tokens, best_score, best->tokens)) {
        best = &h;
        best_score = s;
      }
    }
    BeamResult r;
    r.tokens = best->tokens;
    r.log_prob = best->log_prob;
    r.score = best_score;
    r.finished = done;
    return r;
  };
  if (!finished.empty()) return pick(finished, true);
  if (live.empty()) return BeamResult{{}, 0.0, 0.0, false};
  return pick(live, false);
}

}  // namespace stylegen
