// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Fixtures with parameters set by hand and reference values computed by
// plain scalar loops, independent of the tensor kernels.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gswa/allocator.hpp"

namespace gswa::testing {

// Scalar reference pieces for the hand fixtures.
using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat to_mat(const Tensor& t) {
  Mat m(t.dim(0), Vec(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t(i, j);
  return m;
}

inline Mat mul(const Mat& a, const Mat& b) {
  Mat out(a.size(), Vec(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Vec norm_row(const Vec& v, const Vec& g, const Vec& b) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= double(v.size());
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / std::sqrt(var + 1e-6) * g[i] + b[i];
  return out;
}

inline Vec softmax(const Vec& s) {
  Vec e(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) z += (e[i] = std::exp(s[i]));
  for (double& v : e) v /= z;
  return e;
}

inline Tensor hand_matrix(std::size_t rows, std::size_t cols, double a, double b) {
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(i, j) = float(a * double(i + 1) - b * double(j) + 0.05 * double(i * j));
  return t;
}

// Largest deviation of contextualize from the scalar reference on a 1-block,
// 1-head, width-2 stack with three rows.
inline double contextualize_fixture_error() {
  GswaConfig cfg;
  cfg.dim = 2;
  cfg.blocks = 1;
  cfg.heads = 1;
  ParamStore p;
  init_gswa_params(p, SeededInit(1), cfg, 2);
  const std::string pre = "gswa.block0";
  p.set(pre + ".ln1.g", Tensor::vector({1.5f, 0.5f}));
  p.set(pre + ".ln1.b", Tensor::vector({0.1f, -0.2f}));
  p.set(pre + ".attn.q", Tensor::matrix({{0.5f, -0.25f}, {0.75f, 1.0f}}));
  p.set(pre + ".attn.k", Tensor::matrix({{1.0f, 0.5f}, {-0.5f, 0.25f}}));
  p.set(pre + ".attn.v", Tensor::matrix({{0.25f, 1.0f}, {0.5f, -0.75f}}));
  p.set(pre + ".attn.o", Tensor::matrix({{1.0f, 0.0f}, {0.25f, 0.5f}}));
  p.set(pre + ".ln2.g", Tensor::vector({0.8f, 1.2f}));
  p.set(pre + ".ln2.b", Tensor::vector({0.0f, 0.3f}));
  p.set(pre + ".ffn.fc1.w", hand_matrix(2, 8, 0.2, 0.05));
  p.set(pre + ".ffn.fc1.b", Tensor(Shape{8}, 0.1f));
  p.set(pre + ".ffn.fc2.w", hand_matrix(8, 2, -0.05, 0.1));
  p.set(pre + ".ffn.fc2.b", Tensor::vector({0.2f, -0.1f}));
  const Tensor x = Tensor::matrix({{1.0f, -0.5f}, {0.25f, 2.0f}, {-1.0f, 0.75f}});

  const Tensor got = contextualize({x}, p, cfg).rows;

  auto vec = [&](const std::string& n) {
    const Tensor& t = p.get(n);
    return Vec(t.data().begin(), t.data().end());
  };
  const Mat xs = to_mat(x);
  Mat n1;
  for (const auto& r : xs) n1.push_back(norm_row(r, vec(pre + ".ln1.g"), vec(pre + ".ln1.b")));
  const Mat q = mul(n1, to_mat(p.get(pre + ".attn.q")));
  const Mat k = mul(n1, to_mat(p.get(pre + ".attn.k")));
  const Mat v = mul(n1, to_mat(p.get(pre + ".attn.v")));
  Mat a;
  for (std::size_t i = 0; i < 3; ++i) {
    Vec s(3);
    for (std::size_t j = 0; j < 3; ++j) s[j] = (q[i][0] * k[j][0] + q[i][1] * k[j][1]) / std::sqrt(2.0);
    a.push_back(softmax(s));
  }
  const Mat att = mul(mul(a, v), to_mat(p.get(pre + ".attn.o")));
  Mat h = xs;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) h[i][j] += att[i][j];
  Mat n2;
  for (const auto& r : h) n2.push_back(norm_row(r, vec(pre + ".ln2.g"), vec(pre + ".ln2.b")));
  Mat f1 = mul(n2, to_mat(p.get(pre + ".ffn.fc1.w")));
  for (auto& r : f1)
    for (std::size_t j = 0; j < 8; ++j) {
      const double z = r[j] + 0.1f;
      r[j] = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
    }
  const Mat f2 = mul(f1, to_mat(p.get(pre + ".ffn.fc2.w")));
  const Vec b2 = vec(pre + ".ffn.fc2.b");
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) worst = std::max(worst, std::abs(got(i, j) - (h[i][j] + f2[i][j] + b2[j])));
  return worst;
}

// Largest deviation of extract_weights from the closed form for two tiles
// plus a global row, one head, identity projections.
inline double extract_weights_fixture_error() {
  GswaConfig cfg;
  cfg.dim = 2;
  cfg.blocks = 1;
  cfg.heads = 1;
  ParamStore p;
  init_gswa_params(p, SeededInit(1), cfg, 2);
  p.set("gswa.weight_attn.q", Tensor::identity(2));
  p.set("gswa.weight_attn.k", Tensor::identity(2));
  const double s = 2.0, r = 1.0 / std::sqrt(2.0);
  const Tensor rows = Tensor::matrix({{float(s), 0.0f}, {0.0f, float(s)}, {float(s * r), float(s * r)}});
  const WeightVector w = extract_weights({rows}, p, cfg);
  if (w.size() != 3 || !w.on_simplex()) return 1.0;
  // Global query g = s(e1+e2)/sqrt2 against keys s*e1, s*e2, g, scaled by 1/sqrt(D_g).
  const double g0 = s * r, g1 = s * r;
  const Vec scores{(g0 * s) / std::sqrt(2.0), (g1 * s) / std::sqrt(2.0), (g0 * g0 + g1 * g1) / std::sqrt(2.0)};
  const Vec ref = softmax(scores);
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(w.w[i] - ref[i]));
  return worst;
}

}  // namespace gswa::testing
