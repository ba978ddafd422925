// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "gswa/errors.hpp"
#include "gswa/kernels.hpp"
#include "support.hpp"

using namespace gswa;
using namespace gswa::kernels;
using gswa::testing::random_tensor;

TEST_CASE("tensor construction checks shape and data") {
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);
  const Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(t.shape() == Shape{2, 3});
  CHECK(t(1, 2) == 6.0f);
  CHECK(t.row(1)[0] == 4.0f);
  CHECK(t.reshaped({3, 2})(2, 1) == 6.0f);
}

TEST_CASE("matmul") {
  CHECK(matmul(Tensor::identity(2), Tensor::identity(2)) == Tensor::identity(2));
  CHECK(matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{1}, {1}})) == Tensor::matrix({{3}, {7}}));

  const Tensor a = random_tensor({5, 7}, 1), b = random_tensor({7, 3}, 2);
  const Tensor c = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double ref = 0.0;
      for (std::size_t p = 0; p < 7; ++p) ref += double(a(i, p)) * double(b(p, j));
      CHECK(std::abs(c(i, j) - ref) < 1e-6);
    }

  try {
    matmul(a, a);
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[5x7] * [5x7]") != std::string::npos);
  }
}

TEST_CASE("matmul is associative on random triples") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Tensor a = random_tensor({4, 6}, s), b = random_tensor({6, 5}, s + 100), c = random_tensor({5, 3}, s + 200);
    const Tensor l = matmul(matmul(a, b), c), r = matmul(a, matmul(b, c));
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      diff += (double(l[i]) - r[i]) * (double(l[i]) - r[i]);
      norm += double(r[i]) * r[i];
    }
    CHECK(std::sqrt(diff / norm) < 1e-4);
  }
}

TEST_CASE("softmax_rows") {
  const Tensor u = softmax_rows(Tensor::matrix({{0, 0, 0}}));
  for (float v : u.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-7));

  const Tensor big = softmax_rows(Tensor::matrix({{1000, 0}}));
  CHECK(std::abs(big(0, 0) - 1.0) < 1e-6);
  CHECK(std::abs(big(0, 1)) < 1e-6);

  const Tensor s = softmax_rows(Tensor::matrix({{1, 2, 3}}));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(s(0, j) - std::exp(double(j + 1)) / z) < 1e-7);
}

TEST_CASE("softmax rows lie on the simplex for random inputs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor s = softmax_rows(random_tensor({4, 9}, seed, -30.0, 30.0));
    for (std::size_t i = 0; i < 4; ++i) {
      double total = 0.0;
      for (float v : s.row(i)) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("masked softmax zeroes disallowed entries") {
  AttentionMask m(1, 3, true);
  m.set(0, 1, false);
  const Tensor s = softmax_rows(Tensor::matrix({{0, 5, 0}}), &m);
  CHECK(s(0, 1) == 0.0f);
  CHECK(s(0, 0) == doctest::Approx(0.5));
  AttentionMask none(1, 3, false);
  CHECK_THROWS_AS(softmax_rows(Tensor::matrix({{0, 5, 0}}), &none), ContractError);
}

TEST_CASE("layer_norm") {
  const Tensor one = Tensor::vector({1, 1});
  const Tensor zero = Tensor::vector({0, 0});
  const Tensor c = layer_norm(Tensor::matrix({{2, 2}}), one, zero);
  CHECK(c(0, 0) == 0.0f);
  CHECK(c(0, 1) == 0.0f);

  const Tensor two = layer_norm(Tensor::matrix({{1, 3}}), one, zero, 0.0);
  CHECK(two(0, 0) == -1.0f);
  CHECK(two(0, 1) == 1.0f);

  CHECK_THROWS_AS(layer_norm(Tensor::matrix({{1}}), Tensor::vector({1}), Tensor::vector({0})), DimensionError);
  CHECK_THROWS_AS(layer_norm(Tensor::matrix({{2, 2}}), one, zero, 0.0), NumericError);

  const Tensor x = random_tensor({1, 16}, 7, -3.0, 5.0);
  const Tensor y = layer_norm(x, Tensor(Shape{16}, 1.0f), Tensor(Shape{16}, 0.0f));
  double mean = 0.0, var = 0.0;
  for (float v : y.data()) mean += v;
  mean /= 16.0;
  for (float v : y.data()) var += (v - mean) * (v - mean);
  var /= 16.0;
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(var - 1.0) < 1e-4);
}

TEST_CASE("gelu") {
  CHECK(gelu(Tensor::vector({0}))[0] == 0.0f);
  CHECK(std::abs(gelu(Tensor::vector({12}))[0] - 12.0) < 1e-4);
  const double ref = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(gelu(Tensor::vector({1}))[0] - ref) < 1e-6);
}

TEST_CASE("multi_head_attention") {
  const Tensor eye4 = Tensor::identity(4);
  const AttentionParams<float> p{eye4, eye4, eye4, eye4};

  SUBCASE("a single token attends to itself") {
    const auto r = multi_head_attention(random_tensor({1, 4}, 3), p, 2);
    CHECK(r.attn.shape() == Shape{2, 1, 1});
    CHECK(r.attn[0] == 1.0f);
    CHECK(r.attn[1] == 1.0f);
  }

  SUBCASE("identical tokens give uniform rows") {
    Tensor x(Shape{3, 4});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) x(i, j) = float(j) * 0.7f - 1.0f;
    const auto r = multi_head_attention(x, p, 2);
    for (float v : r.attn.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
  }

  SUBCASE("width must divide into heads") {
    CHECK_THROWS_AS(multi_head_attention(random_tensor({2, 4}, 1), p, 3), ConfigError);
  }

  SUBCASE("t=3, one head, hand-set 2x2 projections") {
    const Tensor x = Tensor::matrix({{1, 0}, {0, 1}, {1, 1}});
    const AttentionParams<float> q{Tensor::matrix({{1, 0}, {0, 2}}), Tensor::identity(2),
                                   Tensor::matrix({{0, 1}, {1, 0}}), Tensor::identity(2)};
    const auto r = multi_head_attention(x, q, 1);
    // Q = x diag(1,2), K = x, V = x with columns swapped; scores scaled by 1/sqrt(2).
    const double qv[3][2] = {{1, 0}, {0, 2}, {1, 2}};
    const double kv[3][2] = {{1, 0}, {0, 1}, {1, 1}};
    const double vv[3][2] = {{0, 1}, {1, 0}, {1, 1}};
    for (int i = 0; i < 3; ++i) {
      double s[3], z = 0.0;
      for (int j = 0; j < 3; ++j) {
        s[j] = std::exp((qv[i][0] * kv[j][0] + qv[i][1] * kv[j][1]) / std::sqrt(2.0));
        z += s[j];
      }
      for (int d = 0; d < 2; ++d) {
        double out = 0.0;
        for (int j = 0; j < 3; ++j) out += s[j] / z * vv[j][d];
        CHECK(std::abs(r.output(i, d) - out) < 1e-6);
      }
      for (int j = 0; j < 3; ++j) CHECK(std::abs(r.attn(0, i, j) - s[j] / z) < 1e-6);
    }
  }
}

TEST_CASE("float and double instantiations agree to float rounding") {
  const Tensor a = random_tensor({6, 5}, 11);
  const Tensor b = random_tensor({5, 4}, 12);
  const Tensor f = softmax_rows(gelu(matmul(a, b)));
  const TensorD d = softmax_rows(gelu(matmul(a.cast<double>(), b.cast<double>())));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(f[i] - d[i]) < 1e-6);
}
