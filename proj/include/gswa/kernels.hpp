// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense numeric kernels. Storage is whatever the tensor element type is;
// every reduction accumulates in double so float and double instantiations
// agree to float rounding.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gswa/errors.hpp"
#include "gswa/tensor.hpp"

namespace gswa::kernels {

inline constexpr double kLayerNormEps = 1e-6;

template <typename T>
const BasicTensor<T>& check_finite(const BasicTensor<T>& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string(op) + " produced a non-finite value");
  return t;
}

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + " expects a rank-" + std::to_string(rank) +
                         " tensor, got " + shape_str(t.shape()));
  }
}

/// Boolean attention mask: `allowed[i * cols + j]` says whether query i may
/// attend to key j. Every row must allow at least one key.
struct AttentionMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> allowed;

  AttentionMask() = default;
  AttentionMask(std::size_t r, std::size_t c, bool fill)
      : rows(r), cols(c), allowed(r * c, fill ? 1 : 0) {}

  bool operator()(std::size_t i, std::size_t j) const { return allowed[i * cols + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { allowed[i * cols + j] = v ? 1 : 0; }
};

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  BasicTensor<T> out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul shape mismatch: " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const BasicTensor<T> bt = transpose(b);
  BasicTensor<T> out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto br = bt.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += double(ar[p]) * double(br[p]);
      out(i, j) = static_cast<T>(acc);
    }
  }
  check_finite(out, "matmul");
  return out;
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add shape mismatch: " + shape_str(a.shape()) + " + " +
                         shape_str(b.shape()));
  }
  BasicTensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  check_finite(out, "add");
  return out;
}

/// Adds a length-n vector to every row of an m×n matrix.
template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  require_rank(x, 2, "add_bias");
  if (bias.size() != x.dim(1)) {
    throw DimensionError("bias " + shape_str(bias.shape()) + " does not fit rows of " +
                         shape_str(x.shape()));
  }
  BasicTensor<T> out = x;
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
  check_finite(out, "add_bias");
  return out;
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, double c) {
  BasicTensor<T> out = x;
  for (auto& v : out.data()) v = static_cast<T>(double(v) * c);
  check_finite(out, "scale");
  return out;
}

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t start, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  if (count == 0 || start + count > x.dim(1)) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " + shape_str(x.shape()));
  }
  BasicTensor<T> out(Shape{x.dim(0), count});
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = x(i, start + j);
  return out;
}

template <typename T>
BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of zero tensors");
  const std::size_t m = parts.front().dim(0);
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != m) throw DimensionError("concat_cols row count mismatch");
    n += p.dim(1);
  }
  BasicTensor<T> out(Shape{m, n});
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p.dim(1); ++j) out(i, off + j) = p(i, j);
    off += p.dim(1);
  }
  return out;
}

template <typename T>
double sum(const BasicTensor<T>& x) {
  double acc = 0.0;
  for (T v : x.data()) acc += double(v);
  return acc;
}

/// Row-wise softmax, stabilised by subtracting the row maximum. With a mask,
/// disallowed entries get probability exactly zero.
template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& x, const AttentionMask* mask = nullptr) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (mask && (mask->rows != m || mask->cols != n)) {
    throw DimensionError("softmax mask does not match " + shape_str(x.shape()));
  }
  BasicTensor<T> out(x.shape());
  std::vector<double> e(n);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (!mask || (*mask)(i, j)) mx = std::max(mx, double(x(i, j)));
    if (!std::isfinite(mx)) throw ContractError("softmax row " + std::to_string(i) + " is fully masked");
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = (!mask || (*mask)(i, j)) ? std::exp(double(x(i, j)) - mx) : 0.0;
      total += e[j];
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) = static_cast<T>(e[j] / total);
  }
  check_finite(out, "softmax_rows");
  return out;
}

/// Normalises over the last axis, then applies gain and bias.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias, double eps = kLayerNormEps) {
  const std::size_t d = x.shape().back();
  if (d < 2) throw DimensionError("layer_norm needs a feature dimension >= 2, got " + shape_str(x.shape()));
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm affine parameters do not match feature dimension " +
                         std::to_string(d));
  }
  BasicTensor<T> out(x.shape());
  const std::size_t rows = x.size() / d;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x.data().data() + r * d;
    T* o = out.data().data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += double(in[j]);
    mean /= double(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (double(in[j]) - mean) * (double(in[j]) - mean);
    var /= double(d);
    if (var + eps <= 0.0) throw NumericError("layer_norm on a zero-variance vector with eps = 0");
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j)
      o[j] = static_cast<T>((double(in[j]) - mean) * inv * double(gain[j]) + double(bias[j]));
  }
  check_finite(out, "layer_norm");
  return out;
}

inline double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

/// Exact (erf-based) GELU.
template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (auto& v : out.data()) v = static_cast<T>(gelu_scalar(double(v)));
  check_finite(out, "gelu");
  return out;
}

template <typename T>
struct AttentionParams {
  BasicTensor<T> q;  // d x d
  BasicTensor<T> k;  // d x d
  BasicTensor<T> v;  // d x d
  BasicTensor<T> o;  // d x d
};

template <typename T>
struct AttentionResult {
  BasicTensor<T> output;  // t x d
  BasicTensor<T> attn;    // heads x t x t
};

/// Multi-head attention over the rows of `x`. Head h uses columns
/// [h*dh, (h+1)*dh) of the projected queries, keys and values. `score_scale`
/// defaults to 1/sqrt(dh).
template <typename T>
AttentionResult<T> multi_head_attention(const BasicTensor<T>& x, const AttentionParams<T>& p,
                                        std::size_t heads, const AttentionMask* mask = nullptr,
                                        std::optional<double> score_scale = std::nullopt) {
  require_rank(x, 2, "multi_head_attention");
  const std::size_t t = x.dim(0), d = x.dim(1);
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention width " + std::to_string(d) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double s = score_scale.value_or(1.0 / std::sqrt(double(dh)));
  const auto q = matmul(x, p.q);
  const auto k = matmul(x, p.k);
  const auto v = matmul(x, p.v);
  BasicTensor<T> attn(Shape{heads, t, t});
  std::vector<BasicTensor<T>> mixed;
  mixed.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto qh = slice_cols(q, h * dh, dh);
    const auto kh = slice_cols(k, h * dh, dh);
    const auto vh = slice_cols(v, h * dh, dh);
    const auto a = softmax_rows(scale(matmul(qh, transpose(kh)), s), mask);
    std::copy(a.data().begin(), a.data().end(), attn.data().begin() + h * t * t);
    mixed.push_back(matmul(a, vh));
  }
  return {matmul(concat_cols(mixed), p.o), std::move(attn)};
}

}  // namespace gswa::kernels
