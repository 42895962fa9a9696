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
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stylegen/numerics/optim.hpp"
#include "stylegen/seq2seq/model.hpp"

namespace stylegen {

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_ppl = 0.0;  // running average over the epoch's batches (training mode)
  double dev_ppl = 0.0;
  double best_dev_ppl = 0.0;
  bool improved = false;
};

struct TrainResult {
  ModelParams best;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_ppl = 0.0;
};

/// exp(mean per-token NLL) in inference mode.
inline double perplexity(Seq2Seq& model, std::span<const Example> data, std::size_t batch_size) {
  if (data.empty()) throw EmptyCorpus();
  double nll = 0.0;
  std::size_t tokens = 0;
  std::vector<const Example*> batch;
  for (std::size_t i = 0; i < data.size(); i += batch_size) {
    batch.clear();
    for (std::size_t j = i; j < std::min(data.size(), i + batch_size); ++j) batch.push_back(&data[j]);
    ad::Graph g(false);
    std::size_t n = 0;
    const double mean = model.loss(g, batch, false, nullptr, &n).value()[0];
    nll += mean * static_cast<double>(n);
    tokens += n;
  }
  return std::exp(nll / static_cast<double>(tokens));
}

/// SGD over shuffled mini-batches; after each epoch the dev perplexity is
/// measured and the parameters with the lowest value are kept. Fully
/// deterministic for a fixed seed.
inline TrainResult train(Seq2Seq& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                         const TrainConfig& tc, const std::function<void(const EpochLog&)>& on_epoch = {}) {
  if (train_set.empty() || dev_set.empty()) throw EmptyCorpus();
  const std::size_t bs = static_cast<std::size_t>(model.config().batch_size);
  RngState root(tc.seed);
  RngState shuffle_rng = root.split(1);
  const RngState dropout_root = root.split(2);
  auto params = model.param_list();
  for (auto* p : params) p->zero_grad();

  TrainResult result;
  result.best = model.params();
  result.best_dev_ppl = perplexity(model, dev_set, bs);
  double lr = tc.learning_rate;
  int stale = 0;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(train_set.size());
  std::vector<const Example*> batch;
  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t i = 0; i < order.size(); i += bs) {
      batch.clear();
      for (std::size_t j = i; j < std::min(order.size(), i + bs); ++j) batch.push_back(&train_set[order[j]]);
      RngState drop_rng = dropout_root.split(step++);
      ad::Graph g;
      std::size_t n = 0;
      ad::Var loss = model.loss(g, batch, true, &drop_rng, &n);
      const double value = loss.value()[0];
      if (!std::isfinite(value))
        throw DivergedTraining("non-finite training loss at epoch " + std::to_string(epoch));
      g.backward(loss);
      const double norm = global_grad_norm(params);
      if (!std::isfinite(norm))
        throw DivergedTraining("non-finite gradient at epoch " + std::to_string(epoch));
      sgd_step(params, lr, tc.clip_norm);
      nll += value * static_cast<double>(n);
      tokens += n;
    }

    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = lr;
    log.train_ppl = std::exp(nll / static_cast<double>(tokens));
    log.dev_ppl = perplexity(model, dev_set, bs);
    if (!std::isfinite(log.dev_ppl))
      throw DivergedTraining("non-finite dev perplexity at epoch " + std::to_string(epoch));
    log.improved = log.dev_ppl < result.best_dev_ppl;
    if (log.improved) {
      result.best_dev_ppl = log.dev_ppl;
      result.best_epoch = epoch;
      result.best = model.params();
      stale = 0;
    } else {
      ++stale;
      if (tc.halve_on_plateau) lr *= 0.5;
    }
    log.best_dev_ppl = result.best_dev_ppl;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (tc.patience > 0 && stale >= tc.patience) break;
  }
  return result;
}

}  // namespace stylegen
