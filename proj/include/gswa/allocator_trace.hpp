// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tape-recorded GSWA forward pass, generic over the element type so the
// same graph can be evaluated in double precision for gradient oracles.

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "gswa/allocator.hpp"
#include "gswa/blocks.hpp"
#include "gswa/tape.hpp"

namespace gswa::trace {

template <typename T>
class BoundParams {
 public:
  using Var = typename Tape<T>::Var;

  /// Places every named tensor on the tape, as differentiable leaves or as constants.
  BoundParams(Tape<T>& tape, const ParamStore& store, const std::vector<std::string>& names, bool as_leaves) {
    for (const auto& n : names) {
      auto v = store.get(n).template cast<T>();
      vars_.emplace(n, as_leaves ? tape.leaf(std::move(v)) : tape.constant(std::move(v)));
    }
  }

  /// Replaces the binding of `name` with a fresh node holding `value`.
  void rebind(Tape<T>& tape, const std::string& name, BasicTensor<T> value, bool as_leaf) {
    vars_.insert_or_assign(name, as_leaf ? tape.leaf(std::move(value)) : tape.constant(std::move(value)));
  }

  Var operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw ConfigError("parameter '" + name + "' is not bound on the tape");
    return it->second;
  }

  const std::map<std::string, Var>& vars() const { return vars_; }

 private:
  std::map<std::string, Var> vars_;
};

/// Self-attention lets every row see every row. Cross-attention lets the
/// global row (last) see the tile rows and each tile row see only the
/// global row; with a single row the global row attends to itself.
inline kernels::AttentionMask block_mask(std::size_t rows, Strategy strategy) {
  if (strategy != Strategy::kCrossAttn || rows == 1) return kernels::AttentionMask(rows, rows, true);
  kernels::AttentionMask m(rows, rows, false);
  const std::size_t g = rows - 1;
  for (std::size_t j = 0; j < g; ++j) m.set(g, j, true);
  for (std::size_t i = 0; i < g; ++i) m.set(i, g, true);
  return m;
}

template <typename T>
typename Tape<T>::Var attention(Tape<T>& tape, typename Tape<T>::Var x, typename Tape<T>::Var wq,
                                typename Tape<T>::Var wk, typename Tape<T>::Var wv, typename Tape<T>::Var wo,
                                std::size_t heads, const kernels::AttentionMask& mask) {
  const std::size_t d = tape.value(x).dim(1);
  const std::size_t dh = d / heads;
  const double s = 1.0 / std::sqrt(double(dh));
  auto q = tape.matmul(x, wq);
  auto k = tape.matmul(x, wk);
  auto v = tape.matmul(x, wv);
  std::vector<typename Tape<T>::Var> mixed;
  for (std::size_t h = 0; h < heads; ++h) {
    auto scores = tape.scale(tape.matmul(tape.slice_cols(q, h * dh, dh),
                                         tape.transpose(tape.slice_cols(k, h * dh, dh))), s);
    auto a = tape.softmax_rows(scores, mask);
    mixed.push_back(tape.matmul(a, tape.slice_cols(v, h * dh, dh)));
  }
  return tape.matmul(tape.concat_cols(mixed), wo);
}

template <typename T>
typename Tape<T>::Var project_cls(Tape<T>& tape, const BoundParams<T>& p, typename Tape<T>::Var cls) {
  return tape.add_bias(tape.matmul(cls, p["gswa.proj.w"]), p["gswa.proj.b"]);
}

template <typename T>
typename Tape<T>::Var contextualize(Tape<T>& tape, const BoundParams<T>& p, typename Tape<T>::Var x,
                                    const GswaConfig& cfg) {
  if (!cfg.uses_attention()) throw ConfigError("contextualize needs an attention strategy");
  const auto mask = block_mask(tape.value(x).dim(0), cfg.strategy);
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string pre = "gswa.block" + std::to_string(b);
    auto n1 = tape.layer_norm(x, p[pre + ".ln1.g"], p[pre + ".ln1.b"]);
    auto h = tape.add(x, attention(tape, n1, p[pre + ".attn.q"], p[pre + ".attn.k"], p[pre + ".attn.v"],
                                   p[pre + ".attn.o"], cfg.heads, mask));
    auto n2 = tape.layer_norm(h, p[pre + ".ln2.g"], p[pre + ".ln2.b"]);
    auto f = tape.gelu(tape.add_bias(tape.matmul(n2, p[pre + ".ffn.fc1.w"]), p[pre + ".ffn.fc1.b"]));
    f = tape.add_bias(tape.matmul(f, p[pre + ".ffn.fc2.w"]), p[pre + ".ffn.fc2.b"]);
    x = tape.add(h, f);
  }
  return x;
}

/// Head-averaged attention map of the weight layer, scores scaled by
/// 1/sqrt(D_g); returns the global (last) row.
template <typename T>
typename Tape<T>::Var extract_weights(Tape<T>& tape, const BoundParams<T>& p, typename Tape<T>::Var x,
                                      const GswaConfig& cfg) {
  const std::size_t rows = tape.value(x).dim(0);
  const std::size_t d = tape.value(x).dim(1);
  const std::size_t dh = d / cfg.heads;
  const double s = 1.0 / std::sqrt(double(d));
  auto q = tape.matmul(x, p["gswa.weight_attn.q"]);
  auto k = tape.matmul(x, p["gswa.weight_attn.k"]);
  std::optional<typename Tape<T>::Var> total;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    auto scores = tape.scale(tape.matmul(tape.slice_cols(q, h * dh, dh),
                                         tape.transpose(tape.slice_cols(k, h * dh, dh))), s);
    auto a = tape.softmax_rows(scores);
    total = total ? tape.add(*total, a) : a;
  }
  return tape.row(tape.scale(*total, 1.0 / double(cfg.heads)), rows - 1);
}

/// cls rows -> weights, for the attention strategies.
template <typename T>
typename Tape<T>::Var gswa_weights(Tape<T>& tape, const BoundParams<T>& p, typename Tape<T>::Var cls,
                                   const GswaConfig& cfg) {
  auto x = contextualize(tape, p, project_cls(tape, p, cls), cfg);
  return extract_weights(tape, p, x, cfg);
}

/// sum over images of w_i * sum(patch tokens of image i).
template <typename T>
typename Tape<T>::Var weighted_sum_loss(Tape<T>& tape, const BoundParams<T>& p, const ShuffledEmbeddingSet& e,
                                        const GswaConfig& cfg) {
  auto cls = tape.constant(cls_matrix(e).template cast<T>());
  auto w = gswa_weights(tape, p, cls, cfg);
  auto patches = tape.constant(patch_tokens(e).template cast<T>());
  return tape.sum(tape.scale_blocks(patches, w));
}

}  // namespace gswa::trace
