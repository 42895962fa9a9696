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

// Tape-based reverse-mode automatic differentiation over 2-D arrays.
//
// A Graph owns every node created during one forward pass. Nodes are
// appended in evaluation order, so walking the tape backwards is a valid
// reverse topological order. Parameters live outside the graph and receive
// their gradients when backward() finishes.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylegen/error.hpp"
#include "stylegen/numerics/array.hpp"
#include "stylegen/numerics/rng.hpp"

namespace stylegen::ad {

/// Trainable weight with its accumulated gradient.
struct Parameter {
  std::string name;
  Array value;
  Array grad;

  Parameter() = default;
  Parameter(std::string n, Array v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0.0) {}

  void zero_grad() { grad.fill(0.0); }
};

class Graph;

/// Handle to a node on a Graph's tape.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var constant(Array v) {
    Node n;
    n.value = std::move(v);
    return push(std::move(n));
  }

  /// Leaf bound to an external parameter; one node per parameter per graph.
  Var param(Parameter& p) {
    if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
    Node n;
    n.external = &p.value;
    n.param = &p;
    n.requires_grad = grad_enabled_;
    Var v = push(std::move(n));
    param_ids_.emplace(&p, v.id);
    return v;
  }

  /// Appends an op result. `fn` is kept only when some parent needs a gradient.
  Var make(Array value, std::initializer_list<int> parents, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    if (grad_enabled_) {
      for (int p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
      if (n.requires_grad) n.backward = std::move(fn);
    }
    return push(std::move(n));
  }
  Var make(Array value, const std::vector<int>& parents, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    if (grad_enabled_) {
      for (int p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
      if (n.requires_grad) n.backward = std::move(fn);
    }
    return push(std::move(n));
  }

  const Array& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  /// Gradient buffer of a node, allocated as zeros on first use.
  Array& grad(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = Array(value(id).shape(), 0.0);
    return n.grad;
  }
  Array& grad(Var v) { return grad(v.id); }
  bool has_grad(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.empty(); }

  /// Reverse sweep from a scalar loss; parameter gradients accumulate.
  void backward(Var loss) {
    if (value(loss.id).size() != 1) throw NonScalarLoss();
    if (!grad_enabled_ || !requires_grad(loss.id)) return;
    grad(loss.id)[0] += 1.0;
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.param) {
        auto& dst = n.param->grad.storage();
        const auto& src = n.grad.storage();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
      } else if (n.backward) {
        n.backward(*this, id);
      }
    }
  }

 private:
  struct Node {
    Array value;
    const Array* external = nullptr;
    Parameter* param = nullptr;
    Array grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_ids_;
};

inline const Array& Var::value() const { return graph->value(id); }

namespace detail {

inline void require_2d(const Array& a, const char* op) {
  if (a.ndim() != 2) throw ShapeMismatch(std::string(op) + ": expected 2-D operand, got " + shape_str(a.shape()));
}

[[noreturn]] inline void mismatch(const char* op, const Array& a, const Array& b) {
  throw ShapeMismatch(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                      shape_str(b.shape()));
}

inline void add_into(Array& dst, const Array& src) {
  auto& d = dst.storage();
  const double* s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

template <typename F>
Array map(const Array& a, F f) {
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Core ops

inline Var matmul(Var a, Var b) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  const Array& bv = b.value();
  detail::require_2d(av, "matmul");
  detail::require_2d(bv, "matmul");
  if (av.cols() != bv.rows()) detail::mismatch("matmul", av, bv);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Array out = Array::matrix(m, n);
  kernels::gemm_nn(m, k, n, av.data(), bv.data(), out.data());
  return g.make(std::move(out), {a.id, b.id}, [a = a.id, b = b.id, m, k, n](Graph& g, int self) {
    const Array& go = g.grad(self);
    if (g.requires_grad(a)) kernels::gemm_nt(m, n, k, go.data(), g.value(b).data(), g.grad(a).data());
    if (g.requires_grad(b)) kernels::gemm_tn(m, k, n, g.value(a).data(), go.data(), g.grad(b).data());
  });
}

/// Elementwise sum; `b` may also be a single row broadcast over `a`'s rows.
inline Var add(Var a, Var b) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  const Array& bv = b.value();
  detail::require_2d(av, "add");
  detail::require_2d(bv, "add");
  const bool broadcast = bv.rows() == 1 && av.rows() > 1 && bv.cols() == av.cols();
  if (av.shape() != bv.shape() && !broadcast) detail::mismatch("add", av, bv);
  Array out = av;
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[broadcast ? i % cols : i];
  return g.make(std::move(out), {a.id, b.id}, [a = a.id, b = b.id, broadcast, cols](Graph& g, int self) {
    const Array& go = g.grad(self);
    if (g.requires_grad(a)) detail::add_into(g.grad(a), go);
    if (g.requires_grad(b)) {
      Array& gb = g.grad(b);
      if (broadcast)
        for (std::size_t i = 0; i < go.size(); ++i) gb[i % cols] += go[i];
      else
        detail::add_into(gb, go);
    }
  });
}

inline Var sub(Var a, Var b) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  const Array& bv = b.value();
  if (av.shape() != bv.shape()) detail::mismatch("sub", av, bv);
  Array out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return g.make(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, int self) {
    const Array& go = g.grad(self);
    if (g.requires_grad(a)) detail::add_into(g.grad(a), go);
    if (g.requires_grad(b)) {
      Array& gb = g.grad(b);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

inline Var mul(Var a, Var b) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  const Array& bv = b.value();
  if (av.shape() != bv.shape()) detail::mismatch("mul", av, bv);
  Array out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return g.make(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, int self) {
    const Array& go = g.grad(self);
    if (g.requires_grad(a)) {
      Array& ga = g.grad(a);
      const Array& bv = g.value(b);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.requires_grad(b)) {
      Array& gb = g.grad(b);
      const Array& av = g.value(a);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

inline Var scale(Var a, double s) {
  Graph& g = *a.graph;
  Array out = detail::map(a.value(), [s](double x) { return x * s; });
  return g.make(std::move(out), {a.id}, [a = a.id, s](Graph& g, int self) {
    const Array& go = g.grad(self);
    Array& ga = g.grad(a);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * s;
  });
}

/// Column-wise concatenation of operands with equal row counts.
inline Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat: no operands");
  Graph& g = *parts.front().graph;
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    const Array& pv = p.value();
    detail::require_2d(pv, "concat");
    if (pv.rows() != rows) detail::mismatch("concat", parts.front().value(), pv);
    cols += pv.cols();
    ids.push_back(p.id);
    widths.push_back(pv.cols());
  }
  Array out = Array::matrix(rows, cols);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array& pv = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * widths[k], widths[k], out.data() + r * cols + off);
    off += widths[k];
  }
  return g.make(std::move(out), ids, [ids, widths, rows, cols](Graph& g, int self) {
    const Array& go = g.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (g.requires_grad(ids[k])) {
        Array& gp = g.grad(ids[k]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) gp[r * widths[k] + c] += go[r * cols + off + c];
      }
      off += widths[k];
    }
  });
}

/// Columns [begin, end).
inline Var slice(Var a, std::size_t begin, std::size_t end) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  detail::require_2d(av, "slice");
  if (begin >= end || end > av.cols())
    throw ShapeMismatch("slice: columns [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") out of range for " + shape_str(av.shape()));
  const std::size_t rows = av.rows(), cols = av.cols(), w = end - begin;
  Array out = Array::matrix(rows, w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(av.data() + r * cols + begin, w, out.data() + r * w);
  return g.make(std::move(out), {a.id}, [a = a.id, rows, cols, begin, w](Graph& g, int self) {
    const Array& go = g.grad(self);
    Array& ga = g.grad(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) ga[r * cols + begin + c] += go[r * w + c];
  });
}

inline Var tanh(Var a) {
  Graph& g = *a.graph;
  Array out = detail::map(a.value(), [](double x) { return std::tanh(x); });
  return g.make(std::move(out), {a.id}, [a = a.id](Graph& g, int self) {
    const Array& y = g.value(self);
    const Array& go = g.grad(self);
    Array& ga = g.grad(a);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - y[i] * y[i]);
  });
}

inline double sigmoid_scalar(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline Var sigmoid(Var a) {
  Graph& g = *a.graph;
  Array out = detail::map(a.value(), sigmoid_scalar);
  return g.make(std::move(out), {a.id}, [a = a.id](Graph& g, int self) {
    const Array& y = g.value(self);
    const Array& go = g.grad(self);
    Array& ga = g.grad(a);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
  });
}

namespace detail {

// Row-wise log-sum-exp; rows that are entirely -inf give -inf.
inline std::vector<double> row_lse(const Array& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> lse(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = x.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, p[c]);
    if (!std::isfinite(mx)) {
      lse[r] = mx;
      continue;
    }
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(p[c] - mx);
    lse[r] = mx + std::log(s);
  }
  return lse;
}

}  // namespace detail

/// Row-wise softmax.
inline Var softmax(Var a) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  detail::require_2d(av, "softmax");
  const auto lse = detail::row_lse(av);
  Array out(av.shape());
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::exp(av[i] - lse[i / cols]);
  return g.make(std::move(out), {a.id}, [a = a.id, cols](Graph& g, int self) {
    const Array& y = g.value(self);
    const Array& go = g.grad(self);
    Array& ga = g.grad(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += go[r * cols + c] * y[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        ga[i] += y[i] * (go[i] - dot);
      }
    }
  });
}

inline Var log_softmax(Var a) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  detail::require_2d(av, "log_softmax");
  const auto lse = detail::row_lse(av);
  Array out(av.shape());
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - lse[i / cols];
  return g.make(std::move(out), {a.id}, [a = a.id, cols](Graph& g, int self) {
    const Array& y = g.value(self);
    const Array& go = g.grad(self);
    Array& ga = g.grad(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += go[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        ga[i] += go[i] - std::exp(y[i]) * total;
      }
    }
  });
}

/// Rows of `table` selected by `ids`.
inline Var embedding_lookup(Var table, std::span<const int> ids) {
  Graph& g = *table.graph;
  const Array& tv = table.value();
  detail::require_2d(tv, "embedding_lookup");
  const std::size_t dim = tv.cols();
  Array out = Array::matrix(ids.size(), dim);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= tv.rows())
      throw ShapeMismatch("embedding_lookup: id " + std::to_string(ids[r]) + " outside table " +
                          shape_str(tv.shape()));
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[r]) * dim, dim, out.data() + r * dim);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return g.make(std::move(out), {table.id}, [t = table.id, idv = std::move(idv), dim](Graph& g, int self) {
    const Array& go = g.grad(self);
    Array& gt = g.grad(t);
    for (std::size_t r = 0; r < idv.size(); ++r) {
      double* dst = gt.data() + static_cast<std::size_t>(idv[r]) * dim;
      for (std::size_t c = 0; c < dim; ++c) dst[c] += go[r * dim + c];
    }
  });
}

/// Sum over rows of weight[r] * -log softmax(logits)[r, target[r]].
/// Rows with zero weight (padding) contribute nothing.
inline Var cross_entropy(Var logits, std::span<const int> targets, std::span<const double> weights = {}) {
  Graph& g = *logits.graph;
  const Array& lv = logits.value();
  detail::require_2d(lv, "cross_entropy");
  if (targets.size() != lv.rows())
    throw ShapeMismatch("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                        shape_str(lv.shape()));
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(targets.size(), 1.0);
  if (w.size() != targets.size()) throw ShapeMismatch("cross_entropy: weight count differs from target count");
  const std::size_t cols = lv.cols();
  const auto lse = detail::row_lse(lv);
  double loss = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (w[r] == 0.0) continue;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= cols)
      throw ShapeMismatch("cross_entropy: target id out of range");
    loss += w[r] * (lse[r] - lv[r * cols + static_cast<std::size_t>(targets[r])]);
  }
  std::vector<int> tv(targets.begin(), targets.end());
  return g.make(Array::scalar(loss), {logits.id},
                [l = logits.id, tv = std::move(tv), w = std::move(w), lse, cols](Graph& g, int self) {
                  const double go = g.grad(self)[0];
                  const Array& lv = g.value(l);
                  Array& gl = g.grad(l);
                  for (std::size_t r = 0; r < tv.size(); ++r) {
                    if (w[r] == 0.0) continue;
                    const double s = go * w[r];
                    for (std::size_t c = 0; c < cols; ++c)
                      gl[r * cols + c] += s * std::exp(lv[r * cols + c] - lse[r]);
                    gl[r * cols + static_cast<std::size_t>(tv[r])] -= s;
                  }
                });
}

inline Var sum(Var a) {
  Graph& g = *a.graph;
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return g.make(Array::scalar(s), {a.id}, [a = a.id](Graph& g, int self) {
    const double go = g.grad(self)[0];
    for (double& v : g.grad(a).storage()) v += go;
  });
}

/// States hold n blocks of width D per row: out[b, i] = <q[b], states[b, block i]>.
inline Var batched_dot(Var q, Var states) {
  Graph& g = *q.graph;
  const Array& qv = q.value();
  const Array& sv = states.value();
  const std::size_t rows = qv.rows(), dim = qv.cols();
  if (sv.rows() != rows || sv.cols() % dim != 0) detail::mismatch("batched_dot", qv, sv);
  const std::size_t n = sv.cols() / dim;
  Array out = Array::matrix(rows, n);
  for (std::size_t b = 0; b < rows; ++b)
    for (std::size_t i = 0; i < n; ++i) {
      const double* qp = qv.data() + b * dim;
      const double* sp = sv.data() + b * n * dim + i * dim;
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += qp[d] * sp[d];
      out[b * n + i] = s;
    }
  return g.make(std::move(out), {q.id, states.id}, [q = q.id, s = states.id, rows, dim, n](Graph& g, int self) {
    const Array& go = g.grad(self);
    const Array& qv = g.value(q);
    const Array& sv = g.value(s);
    const bool gq = g.requires_grad(q), gs = g.requires_grad(s);
    for (std::size_t b = 0; b < rows; ++b)
      for (std::size_t i = 0; i < n; ++i) {
        const double w = go[b * n + i];
        if (w == 0.0) continue;
        if (gq) {
          double* dq = g.grad(q).data() + b * dim;
          const double* sp = sv.data() + b * n * dim + i * dim;
          for (std::size_t d = 0; d < dim; ++d) dq[d] += w * sp[d];
        }
        if (gs) {
          double* ds = g.grad(s).data() + b * n * dim + i * dim;
          const double* qp = qv.data() + b * dim;
          for (std::size_t d = 0; d < dim; ++d) ds[d] += w * qp[d];
        }
      }
  });
}

/// out[b] = sum_i weights[b, i] * states[b, block i].
inline Var weighted_sum(Var weights, Var states) {
  Graph& g = *weights.graph;
  const Array& wv = weights.value();
  const Array& sv = states.value();
  const std::size_t rows = wv.rows(), n = wv.cols();
  if (sv.rows() != rows || sv.cols() % n != 0) detail::mismatch("weighted_sum", wv, sv);
  const std::size_t dim = sv.cols() / n;
  Array out = Array::matrix(rows, dim);
  for (std::size_t b = 0; b < rows; ++b)
    for (std::size_t i = 0; i < n; ++i) {
      const double w = wv[b * n + i];
      if (w == 0.0) continue;
      const double* sp = sv.data() + b * n * dim + i * dim;
      double* op = out.data() + b * dim;
      for (std::size_t d = 0; d < dim; ++d) op[d] += w * sp[d];
    }
  return g.make(std::move(out), {weights.id, states.id},
                [w = weights.id, s = states.id, rows, dim, n](Graph& g, int self) {
                  const Array& go = g.grad(self);
                  const Array& wv = g.value(w);
                  const Array& sv = g.value(s);
                  const bool gw = g.requires_grad(w), gs = g.requires_grad(s);
                  for (std::size_t b = 0; b < rows; ++b) {
                    const double* gp = go.data() + b * dim;
                    for (std::size_t i = 0; i < n; ++i) {
                      const double* sp = sv.data() + b * n * dim + i * dim;
                      if (gw) {
                        double acc = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) acc += gp[d] * sp[d];
                        g.grad(w)[b * n + i] += acc;
                      }
                      if (gs) {
                        const double wt = wv[b * n + i];
                        double* ds = g.grad(s).data() + b * n * dim + i * dim;
                        for (std::size_t d = 0; d < dim; ++d) ds[d] += wt * gp[d];
                      }
                    }
                  }
                });
}

/// Row r of the result is a[r] where keep[r] is set, else b[r].
inline Var where_rows(std::span<const std::uint8_t> keep, Var a, Var b) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  const Array& bv = b.value();
  if (av.shape() != bv.shape()) detail::mismatch("where_rows", av, bv);
  if (keep.size() != av.rows()) throw ShapeMismatch("where_rows: mask length differs from row count");
  const std::size_t cols = av.cols();
  Array out = bv;
  for (std::size_t r = 0; r < keep.size(); ++r)
    if (keep[r]) std::copy_n(av.data() + r * cols, cols, out.data() + r * cols);
  std::vector<std::uint8_t> kv(keep.begin(), keep.end());
  return g.make(std::move(out), {a.id, b.id}, [a = a.id, b = b.id, kv = std::move(kv), cols](Graph& g, int self) {
    const Array& go = g.grad(self);
    for (std::size_t r = 0; r < kv.size(); ++r) {
      const int dst = kv[r] ? a : b;
      if (!g.requires_grad(dst)) continue;
      double* d = g.grad(dst).data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) d[c] += go[r * cols + c];
    }
  });
}

inline Var gather_rows(Var a, std::span<const std::size_t> rows_idx) {
  Graph& g = *a.graph;
  const Array& av = a.value();
  const std::size_t cols = av.cols();
  Array out = Array::matrix(rows_idx.size(), cols);
  for (std::size_t r = 0; r < rows_idx.size(); ++r) {
    if (rows_idx[r] >= av.rows()) throw ShapeMismatch("gather_rows: row index out of range");
    std::copy_n(av.data() + rows_idx[r] * cols, cols, out.data() + r * cols);
  }
  std::vector<std::size_t> idx(rows_idx.begin(), rows_idx.end());
  return g.make(std::move(out), {a.id}, [a = a.id, idx = std::move(idx), cols](Graph& g, int self) {
    const Array& go = g.grad(self);
    Array& ga = g.grad(a);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < cols; ++c) ga[idx[r] * cols + c] += go[r * cols + c];
  });
}

/// Fused LSTM cell. `gates` holds pre-activations [i | f | o | u] of width
/// 4H; returns [h | c] of width 2H with c = f*c_prev + i*u, h = o*tanh(c).
inline Var lstm_cell(Var gates, Var c_prev) {
  Graph& g = *gates.graph;
  const Array& gv = gates.value();
  const Array& cv = c_prev.value();
  const std::size_t rows = gv.rows(), hid = cv.cols();
  if (gv.cols() != 4 * hid || cv.rows() != rows) detail::mismatch("lstm_cell", gv, cv);
  Array out = Array::matrix(rows, 2 * hid);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* gp = gv.data() + r * 4 * hid;
    for (std::size_t j = 0; j < hid; ++j) {
      const double i = sigmoid_scalar(gp[j]);
      const double f = sigmoid_scalar(gp[hid + j]);
      const double o = sigmoid_scalar(gp[2 * hid + j]);
      const double u = std::tanh(gp[3 * hid + j]);
      const double c = f * cv[r * hid + j] + i * u;
      out[r * 2 * hid + j] = o * std::tanh(c);
      out[r * 2 * hid + hid + j] = c;
    }
  }
  return g.make(std::move(out), {gates.id, c_prev.id}, [gid = gates.id, cid = c_prev.id, rows, hid](Graph& g, int self) {
    const Array& go = g.grad(self);
    const Array& gv = g.value(gid);
    const Array& cv = g.value(cid);
    const Array& y = g.value(self);
    const bool need_g = g.requires_grad(gid), need_c = g.requires_grad(cid);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gp = gv.data() + r * 4 * hid;
      for (std::size_t j = 0; j < hid; ++j) {
        const double i = sigmoid_scalar(gp[j]);
        const double f = sigmoid_scalar(gp[hid + j]);
        const double o = sigmoid_scalar(gp[2 * hid + j]);
        const double u = std::tanh(gp[3 * hid + j]);
        const double c = y[r * 2 * hid + hid + j];
        const double tc = std::tanh(c);
        const double gh = go[r * 2 * hid + j];
        const double dc = go[r * 2 * hid + hid + j] + gh * o * (1.0 - tc * tc);
        if (need_g) {
          double* dg = g.grad(gid).data() + r * 4 * hid;
          dg[j] += dc * u * i * (1.0 - i);
          dg[hid + j] += dc * cv[r * hid + j] * f * (1.0 - f);
          dg[2 * hid + j] += gh * tc * o * (1.0 - o);
          dg[3 * hid + j] += dc * i * (1.0 - u * u);
        }
        if (need_c) g.grad(cid)[r * hid + j] += dc * f;
      }
    }
  });
}

/// Inverted dropout; identity when not training or p == 0.
inline Var dropout(Var x, double p, bool training, RngState& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return x;
  Graph& g = *x.graph;
  const Array& xv = x.value();
  Array mask(xv.shape());
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < p ? 0.0 : keep_scale;
  return mul(x, g.constant(std::move(mask)));
}

}  // namespace stylegen::ad
