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

// Attentional encoder-decoder over slot-value sequences.
//
// Encoder: each slot-value pair is the concatenation of its type and value
// embeddings (plus the constraint vector under Method 2), read by a stacked
// bidirectional LSTM. State i is [forward_i ; backward_i].
//
// Decoder: a stacked LSTM whose input at step t is
//   [embedding(y_{t-1}) ; d_{t-1}]          (NoCon, M1, M2)
//   [embedding(y_{t-1}) ; d_{t-1} ; c]      (M3)
// where d is the attention context. Scores are query^T W state (global
// bilinear attention) and the output layer reads [h_t ; d_t].
// The initial decoder state comes from a learned linear bridge over the
// final forward/backward encoder states of the same layer.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylegen/numerics/autodiff.hpp"
#include "stylegen/numerics/init.hpp"
#include "stylegen/seq2seq/config.hpp"
#include "stylegen/seq2seq/constraint.hpp"
#include "stylegen/text.hpp"

namespace stylegen {

/// One encoded training/inference instance.
struct Example {
  std::vector<int> slot_types;
  std::vector<int> slot_values;
  ConstraintVector constraint;
  std::vector<int> target;  // token ids, no BOS/EOS
};

struct VocabSizes {
  std::size_t slot_types = 0;
  std::size_t slot_values = 0;
  std::size_t target = 0;
};

using ModelParams = std::map<std::string, ad::Parameter>;

struct EncoderStates {
  ad::Var states;              // [B, n * state_dim], position-major blocks
  std::size_t length = 0;      // n
  std::size_t state_dim = 0;   // 2 * rnn_size
  std::optional<Array> mask;   // [B, n] additive: 0 or -inf; absent when no padding
  std::vector<ad::Var> final_h, final_c;  // bridged initial decoder state per layer
};

struct DecoderState {
  std::vector<ad::Var> h, c;
  ad::Var context;  // d from the previous step
};

struct AttentionResult {
  ad::Var context;
  ad::Var weights;
};

/// Global bilinear attention: scores_i = query^T W state_i, softmax over
/// positions (masked entries get -inf), context = sum_i weight_i state_i.
inline AttentionResult attention(ad::Var query, ad::Var w, const EncoderStates& enc) {
  if (query.cols() != w.rows() || w.cols() != enc.state_dim)
    throw ShapeMismatch("attention: query " + shape_str(query.shape()) + " and W " + shape_str(w.shape()) +
                        " incompatible with state dim " + std::to_string(enc.state_dim));
  ad::Graph& g = *query.graph;
  ad::Var scores = ad::batched_dot(ad::matmul(query, w), enc.states);
  if (enc.mask) scores = ad::add(scores, g.constant(*enc.mask));
  ad::Var weights = ad::softmax(scores);
  return {ad::weighted_sum(weights, enc.states), weights};
}

class Seq2Seq {
 public:
  /// Called with (step, input ids) every time the decoder consumes tokens
  /// inside loss(); lets tests observe teacher forcing.
  using DecoderInputHook = std::function<void(std::size_t, std::span<const int>)>;

  Seq2Seq(ModelConfig cfg, VocabSizes sizes, RngState& rng) : cfg_(cfg), sizes_(sizes) {
    cfg_.validate();
    for (const auto& [name, shape] : layout()) {
      const bool bias = shape[0] == 1;
      params_.emplace(name, ad::Parameter(name, bias ? Array(shape, 0.0) : glorot_init(shape, rng)));
    }
  }

  Seq2Seq(ModelConfig cfg, VocabSizes sizes, ModelParams params)
      : cfg_(cfg), sizes_(sizes), params_(std::move(params)) {
    cfg_.validate();
    const auto expected = layout();
    if (expected.size() != params_.size()) throw DataError("parameter set does not match model layout");
    for (const auto& [name, shape] : expected) {
      auto it = params_.find(name);
      if (it == params_.end()) throw DataError("missing parameter '" + name + "'");
      if (it->second.value.shape() != shape)
        throw DataError("parameter '" + name + "' has shape " + shape_str(it->second.value.shape()) +
                        ", expected " + shape_str(shape));
      if (it->second.grad.shape() != shape) it->second.grad = Array(shape, 0.0);
    }
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  const VocabSizes& vocab_sizes() const noexcept { return sizes_; }
  ModelParams& params() noexcept { return params_; }
  const ModelParams& params() const noexcept { return params_; }
  ad::Parameter& param(const std::string& name) { return params_.at(name); }

  std::vector<ad::Parameter*> param_list() {
    std::vector<ad::Parameter*> out;
    for (auto& [_, p] : params_) out.push_back(&p);
    return out;
  }

  std::size_t hidden() const { return static_cast<std::size_t>(cfg_.rnn_size); }
  std::size_t embed() const { return static_cast<std::size_t>(cfg_.embed_size); }
  std::size_t layers() const { return static_cast<std::size_t>(cfg_.rnn_layers); }
  std::size_t constraint_dim() const { return cfg_.constraint_dim(); }

  std::size_t encoder_input_dim() const {
    return 2 * embed() + (cfg_.method == Method::kM2 ? constraint_dim() : 0);
  }
  std::size_t decoder_input_dim() const {
    return embed() + 2 * hidden() + (cfg_.method == Method::kM3 ? constraint_dim() : 0);
  }

  DecoderInputHook decoder_input_hook;

  /// Name -> shape of every parameter, in a fixed order.
  std::vector<std::pair<std::string, Shape>> layout() const {
    const std::size_t h = hidden(), e = embed();
    std::vector<std::pair<std::string, Shape>> out = {
        {"emb.type", {sizes_.slot_types, e}},
        {"emb.value", {sizes_.slot_values, e}},
        {"emb.target", {sizes_.target, e}},
    };
    for (std::size_t l = 0; l < layers(); ++l) {
      const std::size_t in = l == 0 ? encoder_input_dim() : 2 * h;
      for (const char* dir : {"f", "b"}) {
        const std::string p = "enc.l" + std::to_string(l) + "." + dir + ".";
        out.push_back({p + "Wx", {in, 4 * h}});
        out.push_back({p + "Wh", {h, 4 * h}});
        out.push_back({p + "b", {1, 4 * h}});
      }
    }
    for (std::size_t l = 0; l < layers(); ++l) {
      const std::string p = "bridge.l" + std::to_string(l) + ".";
      out.push_back({p + "Wh", {2 * h, h}});
      out.push_back({p + "bh", {1, h}});
      out.push_back({p + "Wc", {2 * h, h}});
      out.push_back({p + "bc", {1, h}});
    }
    for (std::size_t l = 0; l < layers(); ++l) {
      const std::size_t in = l == 0 ? decoder_input_dim() : h;
      const std::string p = "dec.l" + std::to_string(l) + ".";
      out.push_back({p + "Wx", {in, 4 * h}});
      out.push_back({p + "Wh", {h, 4 * h}});
      out.push_back({p + "b", {1, 4 * h}});
    }
    out.push_back({"attn.W", {h, 2 * h}});
    out.push_back({"out.W", {3 * h, sizes_.target}});
    out.push_back({"out.b", {1, sizes_.target}});
    return out;
  }

  /// [type embedding ; value embedding] per row, extended with the
  /// constraint rows under Method 2.
  ad::Var encode_slot_value(ad::Graph& g, std::span<const int> types, std::span<const int> values,
                            const Array* constraint_rows) {
    std::vector<ad::Var> parts = {ad::embedding_lookup(g.param(param("emb.type")), types),
                                  ad::embedding_lookup(g.param(param("emb.value")), values)};
    if (cfg_.method == Method::kM2) {
      if (!constraint_rows || constraint_rows->cols() != constraint_dim())
        throw ShapeMismatch("method 2 needs constraint rows of width " + std::to_string(constraint_dim()));
      parts.push_back(g.constant(*constraint_rows));
    }
    return ad::concat(parts);
  }

  /// Constraint vectors of a batch stacked into [B, dim].
  Array constraint_rows(std::span<const Example* const> batch) const {
    const std::size_t dim = constraint_dim();
    if (dim == 0) return {};
    Array rows = Array::matrix(batch.size(), dim);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (batch[b]->constraint.size() != dim)
        throw ShapeMismatch("constraint vector has width " + std::to_string(batch[b]->constraint.size()) +
                            ", model expects " + std::to_string(dim));
      std::copy_n(batch[b]->constraint.values.data(), dim, rows.data() + b * dim);
    }
    return rows;
  }

  EncoderStates encode(ad::Graph& g, std::span<const Example* const> batch, bool training, RngState* rng) {
    const std::size_t rows = batch.size(), h = hidden();
    std::size_t n = 0;
    for (const auto* ex : batch) {
      if (ex->slot_types.empty() || ex->slot_types.size() != ex->slot_values.size())
        throw ShapeMismatch("encoder input needs >= 1 aligned slot-type/value positions");
      n = std::max(n, ex->slot_types.size());
    }
    const Array crow = constraint_rows(batch);

    std::vector<ad::Var> layer_in(n);
    std::vector<std::vector<std::uint8_t>> keep(n, std::vector<std::uint8_t>(rows, 1));
    std::vector<bool> any_pad(n, false);
    bool padded = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> types(rows, kPadId), values(rows, kPadId);
      for (std::size_t b = 0; b < rows; ++b) {
        if (i < batch[b]->slot_types.size()) {
          types[b] = batch[b]->slot_types[i];
          values[b] = batch[b]->slot_values[i];
        } else {
          keep[i][b] = 0;
          any_pad[i] = true;
          padded = true;
        }
      }
      layer_in[i] = encode_slot_value(g, types, values, crow.empty() ? nullptr : &crow);
    }

    EncoderStates enc;
    enc.length = n;
    enc.state_dim = 2 * h;
    std::vector<ad::Var> fin_fh(layers()), fin_fc(layers()), fin_bh(layers()), fin_bc(layers());
    std::vector<ad::Var> layer_out(n);
    for (std::size_t l = 0; l < layers(); ++l) {
      std::vector<ad::Var> fwd(n), bwd(n);
      for (int pass = 0; pass < 2; ++pass) {
        const std::string p = "enc.l" + std::to_string(l) + (pass == 0 ? ".f." : ".b.");
        ad::Var hs = g.constant(Array::matrix(rows, h));
        ad::Var cs = g.constant(Array::matrix(rows, h));
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = pass == 0 ? k : n - 1 - k;
          auto [h2, c2] = lstm_step(g, p, layer_in[i], hs, cs);
          if (any_pad[i]) {
            h2 = ad::where_rows(keep[i], h2, hs);
            c2 = ad::where_rows(keep[i], c2, cs);
          }
          hs = h2;
          cs = c2;
          (pass == 0 ? fwd : bwd)[i] = hs;
        }
        (pass == 0 ? fin_fh : fin_bh)[l] = hs;
        (pass == 0 ? fin_fc : fin_bc)[l] = cs;
      }
      for (std::size_t i = 0; i < n; ++i) layer_out[i] = ad::concat({fwd[i], bwd[i]});
      if (l + 1 < layers())
        for (std::size_t i = 0; i < n; ++i) layer_in[i] = drop(layer_out[i], training, rng);
    }
    enc.states = n == 1 ? layer_out[0] : ad::concat(layer_out);
    if (padded) {
      Array mask = Array::matrix(rows, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < rows; ++b)
          if (!keep[i][b]) mask[b * n + i] = -std::numeric_limits<double>::infinity();
      enc.mask = std::move(mask);
    }
    for (std::size_t l = 0; l < layers(); ++l) {
      const std::string p = "bridge.l" + std::to_string(l) + ".";
      ad::Var hcat = ad::concat({fin_fh[l], fin_bh[l]});
      ad::Var ccat = ad::concat({fin_fc[l], fin_bc[l]});
      enc.final_h.push_back(ad::add(ad::matmul(hcat, g.param(param(p + "Wh"))), g.param(param(p + "bh"))));
      enc.final_c.push_back(ad::add(ad::matmul(ccat, g.param(param(p + "Wc"))), g.param(param(p + "bc"))));
    }
    return enc;
  }

  DecoderState initial_state(ad::Graph& g, const EncoderStates& enc) const {
    DecoderState s;
    s.h = enc.final_h;
    s.c = enc.final_c;
    s.context = g.constant(Array::matrix(enc.states.rows(), enc.state_dim));
    return s;
  }

  struct StepOutput {
    ad::Var logits;
    ad::Var attention;
    DecoderState state;
  };

  /// One decoder step. `constraint_rows` ([B, dim]) is read only by Method 3.
  StepOutput decode_step(ad::Graph& g, const EncoderStates& enc, const DecoderState& state,
                         std::span<const int> prev_ids, const Array* constraint_rows, bool training,
                         RngState* rng) {
    std::vector<ad::Var> parts = {ad::embedding_lookup(g.param(param("emb.target")), prev_ids), state.context};
    if (cfg_.method == Method::kM3) {
      if (!constraint_rows || constraint_rows->cols() != constraint_dim())
        throw ShapeMismatch("method 3 needs constraint rows of width " + std::to_string(constraint_dim()));
      parts.push_back(g.constant(*constraint_rows));
    }
    ad::Var x = ad::concat(parts);
    StepOutput out;
    for (std::size_t l = 0; l < layers(); ++l) {
      auto [h2, c2] = lstm_step(g, "dec.l" + std::to_string(l) + ".", x, state.h[l], state.c[l]);
      out.state.h.push_back(h2);
      out.state.c.push_back(c2);
      x = l + 1 < layers() ? drop(h2, training, rng) : h2;
    }
    ad::Var query = out.state.h.back();
    auto att = attention(query, g.param(param("attn.W")), enc);
    out.state.context = att.context;
    out.attention = att.weights;
    out.logits = ad::add(ad::matmul(ad::concat({query, att.context}), g.param(param("out.W"))),
                         g.param(param("out.b")));
    return out;
  }

  /// Mean per-token negative log-likelihood of the batch targets (each
  /// followed by EOS), decoding with teacher forcing. `tokens` receives the
  /// number of scored tokens.
  ad::Var loss(ad::Graph& g, std::span<const Example* const> batch, bool training, RngState* rng,
               std::size_t* tokens = nullptr) {
    const std::size_t rows = batch.size();
    EncoderStates enc = encode(g, batch, training, rng);
    DecoderState state = initial_state(g, enc);
    const Array crow = constraint_rows(batch);
    std::size_t steps = 0, count = 0;
    for (const auto* ex : batch) {
      steps = std::max(steps, ex->target.size() + 1);
      count += ex->target.size() + 1;
    }
    std::optional<ad::Var> total;
    std::vector<int> prev(rows), tgt(rows);
    std::vector<double> w(rows);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t b = 0; b < rows; ++b) {
        const auto& y = batch[b]->target;
        prev[b] = t == 0 ? kBosId : (t - 1 < y.size() ? y[t - 1] : kPadId);
        tgt[b] = t < y.size() ? y[t] : (t == y.size() ? kEosId : kPadId);
        w[b] = t <= y.size() ? 1.0 : 0.0;
      }
      if (decoder_input_hook) decoder_input_hook(t, prev);
      StepOutput step = decode_step(g, enc, state, prev, crow.empty() ? nullptr : &crow, training, rng);
      ad::Var ce = ad::cross_entropy(step.logits, tgt, w);
      total = total ? ad::add(*total, ce) : ce;
      state = std::move(step.state);
    }
    if (tokens) *tokens = count;
    return ad::scale(*total, 1.0 / static_cast<double>(count));
  }

 private:
  std::pair<ad::Var, ad::Var> lstm_step(ad::Graph& g, const std::string& prefix, ad::Var x, ad::Var h,
                                        ad::Var c) {
    ad::Var gates = ad::add(ad::add(ad::matmul(x, g.param(param(prefix + "Wx"))),
                                    ad::matmul(h, g.param(param(prefix + "Wh")))),
                            g.param(param(prefix + "b")));
    ad::Var hc = ad::lstm_cell(gates, c);
    const std::size_t hd = hidden();
    return {ad::slice(hc, 0, hd), ad::slice(hc, hd, 2 * hd)};
  }

  ad::Var drop(ad::Var x, bool training, RngState* rng) {
    if (!training || cfg_.dropout_p == 0.0 || !rng) return x;
    return ad::dropout(x, cfg_.dropout_p, training, *rng);
  }

  ModelConfig cfg_;
  VocabSizes sizes_;
  ModelParams params_;
};

}  // namespace stylegen
