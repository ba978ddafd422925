// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-mode autodiff over whole-tensor ops. Nodes are appended in
// evaluation order, so a single reverse sweep is a valid topological pass.

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "gswa/errors.hpp"
#include "gswa/kernels.hpp"
#include "gswa/tensor.hpp"

namespace gswa {

template <typename T>
class Tape {
 public:
  using TensorT = BasicTensor<T>;

  struct Var {
    std::size_t id = 0;
  };

  /// With `record == false` no backward closures are kept and every node is
  /// treated as a constant; used for plain forward evaluation.
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(TensorT value) { return push(std::move(value), record_, {}); }
  Var constant(TensorT value) { return push(std::move(value), false, {}); }

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return record_; }

  Var matmul(Var a, Var b) {
    return push(kernels::matmul(value(a), value(b)), any_grad({a, b}),
                [a, b](Tape& t, const TensorT& g) {
                  if (t.requires_grad(a))
                    t.accumulate(a, kernels::matmul(g, kernels::transpose(t.value(b))));
                  if (t.requires_grad(b))
                    t.accumulate(b, kernels::matmul(kernels::transpose(t.value(a)), g));
                });
  }

  Var add(Var a, Var b) {
    return push(kernels::add(value(a), value(b)), any_grad({a, b}),
                [a, b](Tape& t, const TensorT& g) {
                  if (t.requires_grad(a)) t.accumulate(a, g);
                  if (t.requires_grad(b)) t.accumulate(b, g);
                });
  }

  Var add_bias(Var x, Var bias) {
    return push(kernels::add_bias(value(x), value(bias)), any_grad({x, bias}),
                [x, bias](Tape& t, const TensorT& g) {
                  if (t.requires_grad(x)) t.accumulate(x, g);
                  if (t.requires_grad(bias)) {
                    const std::size_t m = g.dim(0), n = g.dim(1);
                    TensorT gb(t.value(bias).shape());
                    for (std::size_t j = 0; j < n; ++j) {
                      double acc = 0.0;
                      for (std::size_t i = 0; i < m; ++i) acc += double(g(i, j));
                      gb[j] = static_cast<T>(acc);
                    }
                    t.accumulate(bias, gb);
                  }
                });
  }

  Var scale(Var x, double c) {
    return push(kernels::scale(value(x), c), any_grad({x}),
                [x, c](Tape& t, const TensorT& g) { t.accumulate(x, kernels::scale(g, c)); });
  }

  Var transpose(Var x) {
    return push(kernels::transpose(value(x)), any_grad({x}),
                [x](Tape& t, const TensorT& g) { t.accumulate(x, kernels::transpose(g)); });
  }

  Var slice_cols(Var x, std::size_t start, std::size_t count) {
    return push(kernels::slice_cols(value(x), start, count), any_grad({x}),
                [x, start, count](Tape& t, const TensorT& g) {
                  TensorT gx(t.value(x).shape());
                  for (std::size_t i = 0; i < g.dim(0); ++i)
                    for (std::size_t j = 0; j < count; ++j) gx(i, start + j) = g(i, j);
                  t.accumulate(x, gx);
                });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    std::vector<TensorT> values;
    values.reserve(parts.size());
    for (Var p : parts) values.push_back(value(p));
    return push(kernels::concat_cols(values), any_grad(parts),
                [parts](Tape& t, const TensorT& g) {
                  std::size_t off = 0;
                  for (Var p : parts) {
                    const std::size_t n = t.value(p).dim(1);
                    if (t.requires_grad(p)) t.accumulate(p, kernels::slice_cols(g, off, n));
                    off += n;
                  }
                });
  }

  Var layer_norm(Var x, Var gain, Var bias, double eps = kernels::kLayerNormEps) {
    return push(kernels::layer_norm(value(x), value(gain), value(bias), eps),
                any_grad({x, gain, bias}),
                [x, gain, bias, eps](Tape& t, const TensorT& g) {
                  t.layer_norm_backward(x, gain, bias, eps, g);
                });
  }

  Var gelu(Var x) {
    return push(kernels::gelu(value(x)), any_grad({x}), [x](Tape& t, const TensorT& g) {
      const TensorT& xv = t.value(x);
      TensorT gx(xv.shape());
      constexpr double kInvSqrt2Pi = 0.39894228040143267794;
      for (std::size_t i = 0; i < xv.size(); ++i) {
        const double v = double(xv[i]);
        const double cdf = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        gx[i] = static_cast<T>(double(g[i]) * (cdf + v * pdf));
      }
      t.accumulate(x, gx);
    });
  }

  Var softmax_rows(Var x, std::optional<kernels::AttentionMask> mask = std::nullopt) {
    const kernels::AttentionMask* m = mask ? &*mask : nullptr;
    Var out{nodes_.size()};
    return push(kernels::softmax_rows(value(x), m), any_grad({x}),
                [x, out](Tape& t, const TensorT& g) {
                  const TensorT& y = t.value(out);
                  TensorT gx(y.shape());
                  for (std::size_t i = 0; i < y.dim(0); ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < y.dim(1); ++j) dot += double(g(i, j)) * double(y(i, j));
                    for (std::size_t j = 0; j < y.dim(1); ++j)
                      gx(i, j) = static_cast<T>(double(y(i, j)) * (double(g(i, j)) - dot));
                  }
                  t.accumulate(x, gx);
                });
  }

  /// Row `i` of a matrix as a rank-1 tensor.
  Var row(Var x, std::size_t i) {
    const TensorT& xv = value(x);
    kernels::require_rank(xv, 2, "row");
    if (i >= xv.dim(0)) throw DimensionError("row index out of range for " + shape_str(xv.shape()));
    auto r = xv.row(i);
    return push(TensorT(Shape{xv.dim(1)}, std::vector<T>(r.begin(), r.end())), any_grad({x}),
                [x, i](Tape& t, const TensorT& g) {
                  TensorT gx(t.value(x).shape());
                  auto dst = gx.row(i);
                  std::copy(g.data().begin(), g.data().end(), dst.begin());
                  t.accumulate(x, gx);
                });
  }

  /// out[b, ...] = w[b] * x[b, ...] for a tensor whose leading axis has w.size() blocks.
  Var scale_blocks(Var x, Var w) {
    const TensorT& xv = value(x);
    const TensorT& wv = value(w);
    if (wv.size() != xv.dim(0)) {
      throw DimensionError("block weights " + shape_str(wv.shape()) + " do not match " +
                           shape_str(xv.shape()));
    }
    TensorT out = xv;
    const std::size_t block = xv.size() / xv.dim(0);
    for (std::size_t b = 0; b < xv.dim(0); ++b)
      for (std::size_t j = 0; j < block; ++j) out[b * block + j] = wv[b] * xv[b * block + j];
    return push(std::move(out), any_grad({x, w}), [x, w, block](Tape& t, const TensorT& g) {
      const TensorT& xv = t.value(x);
      const TensorT& wv = t.value(w);
      if (t.requires_grad(x)) {
        TensorT gx(xv.shape());
        for (std::size_t b = 0; b < wv.size(); ++b)
          for (std::size_t j = 0; j < block; ++j) gx[b * block + j] = wv[b] * g[b * block + j];
        t.accumulate(x, gx);
      }
      if (t.requires_grad(w)) {
        TensorT gw(wv.shape());
        for (std::size_t b = 0; b < wv.size(); ++b) {
          double acc = 0.0;
          for (std::size_t j = 0; j < block; ++j)
            acc += double(g[b * block + j]) * double(xv[b * block + j]);
          gw[b] = static_cast<T>(acc);
        }
        t.accumulate(w, gw);
      }
    });
  }

  Var sum(Var x) {
    return push(TensorT::scalar(static_cast<T>(kernels::sum(value(x)))), any_grad({x}),
                [x](Tape& t, const TensorT& g) {
                  t.accumulate(x, TensorT(t.value(x).shape(), g[0]));
                });
  }

  /// Runs the reverse sweep from a scalar node. Afterwards grad() is valid
  /// for every node; nodes the loss does not depend on report zeros.
  void backward(Var loss) {
    if (!record_) throw ContractError("backward on a tape that was not recording");
    if (loss.id >= nodes_.size()) throw ContractError("backward on a node not on this tape");
    if (value(loss).size() != 1) {
      throw ContractError("backward needs a scalar loss, got " + shape_str(value(loss).shape()));
    }
    grads_.assign(nodes_.size(), std::nullopt);
    grads_[loss.id] = TensorT(value(loss).shape(), T{1});
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!grads_[i] || !n.requires_grad || !n.backprop) continue;
      const TensorT g = *grads_[i];
      n.backprop(*this, g);
    }
  }

  TensorT grad(Var v) const {
    if (v.id < grads_.size() && grads_[v.id]) return *grads_[v.id];
    return TensorT(value(v).shape());
  }

 private:
  using Backprop = std::function<void(Tape&, const TensorT&)>;

  struct Node {
    TensorT value;
    bool requires_grad = false;
    Backprop backprop;
  };

  bool any_grad(const std::vector<Var>& inputs) const {
    if (!record_) return false;
    for (Var v : inputs)
      if (requires_grad(v)) return true;
    return false;
  }

  Var push(TensorT value, bool requires_grad, Backprop fn) {
    Node n{std::move(value), requires_grad, {}};
    if (requires_grad) n.backprop = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  void accumulate(Var v, const TensorT& g) {
    auto& slot = grads_.at(v.id);
    if (!slot) {
      slot = g;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) (*slot)[i] += g[i];
    }
  }

  void layer_norm_backward(Var x, Var gain, Var bias, double eps, const TensorT& g) {
    const TensorT& xv = value(x);
    const TensorT& gv = value(gain);
    const std::size_t d = xv.shape().back();
    const std::size_t rows = xv.size() / d;
    TensorT gx(xv.shape());
    std::vector<double> dg(d, 0.0), db(d, 0.0), xhat(d), dxhat(d);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* in = xv.data().data() + r * d;
      const T* go = g.data().data() + r * d;
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += double(in[j]);
      mean /= double(d);
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) var += (double(in[j]) - mean) * (double(in[j]) - mean);
      var /= double(d);
      const double inv = 1.0 / std::sqrt(var + eps);
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        xhat[j] = (double(in[j]) - mean) * inv;
        dxhat[j] = double(go[j]) * double(gv[j]);
        dg[j] += double(go[j]) * xhat[j];
        db[j] += double(go[j]);
        mean_dxhat += dxhat[j];
        mean_dxhat_xhat += dxhat[j] * xhat[j];
      }
      mean_dxhat /= double(d);
      mean_dxhat_xhat /= double(d);
      T* out = gx.data().data() + r * d;
      for (std::size_t j = 0; j < d; ++j)
        out[j] = static_cast<T>(inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat));
    }
    if (requires_grad(x)) accumulate(x, gx);
    if (requires_grad(gain)) accumulate(gain, TensorT(gv.shape(), std::vector<T>(dg.begin(), dg.end())));
    if (requires_grad(bias)) {
      accumulate(bias, TensorT(value(bias).shape(), std::vector<T>(db.begin(), db.end())));
    }
  }

  bool record_;
  std::vector<Node> nodes_;
  std::vector<std::optional<TensorT>> grads_;
};

}  // namespace gswa
