// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>

#include "doctest.h"
#include "gswa/encoder.hpp"
#include "gswa/errors.hpp"
#include "gswa/verify.hpp"
#include "support.hpp"

using namespace gswa;
using namespace gswa::testing;

namespace {

EncoderConfig small_encoder(std::size_t depth = 1) {
  EncoderConfig cfg;
  cfg.tile_size = 64;
  cfg.patch_size = 16;
  cfg.depth = depth;
  cfg.dim = 8;
  cfg.heads = 2;
  return cfg;
}

ParamStore encoder_params(const EncoderConfig& cfg, std::uint64_t seed = 1) {
  ParamStore store;
  init_encoder_params(store, SeededInit(seed), cfg);
  return store;
}

TileBatch batch_of(std::vector<ImageTensor> tiles, bool thumbnail) {
  std::vector<ImageTensor> thumb;
  if (thumbnail) {
    thumb.push_back(tiles.back());
    tiles.pop_back();
  }
  ImageTensor canvas = tiles.front();
  return TileBatch{std::move(tiles), std::move(thumb), std::move(canvas), CropPlan{}};
}

}  // namespace

TEST_CASE("encoder config validation") {
  EncoderConfig cfg = small_encoder();
  CHECK_NOTHROW(cfg.validate());
  cfg.patch_size = 15;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_encoder();
  cfg.patch_size = 64 / 3 + 1;  // grid would not divide evenly
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_encoder();
  cfg.tile_size = 48;  // grid 3 is odd
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_encoder();
  cfg.heads = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  const EncoderConfig def;
  CHECK(def.grid() == 14);
  CHECK(def.patches() == 196);
}

TEST_CASE("encode shapes at the default geometry") {
  EncoderConfig cfg;
  cfg.depth = 1;
  cfg.dim = 16;
  const ParamStore params = encoder_params(cfg);
  const TileBatch b = batch_of({noise_image(448, 448, 1), noise_image(448, 448, 2), noise_image(448, 448, 3)}, true);
  const EmbeddingSet e = encode(b, cfg, params);
  CHECK(e.tokens.shape() == Shape{3, 197, 16});
  CHECK(e.layout.tile_ids == std::vector<std::size_t>{0, 1});
  CHECK(e.layout.has_thumbnail);
  const ShuffledEmbeddingSet s = pixel_shuffle(e);
  CHECK(s.tokens.shape() == Shape{3, 50, 64});
  CHECK(s.grid == 7);
}

TEST_CASE("identical tiles encode to identical blocks") {
  const EncoderConfig cfg = small_encoder(2);
  const ParamStore params = encoder_params(cfg);
  const ImageTensor t = noise_image(64, 64, 4);
  const EmbeddingSet e = encode(batch_of({t, noise_image(64, 64, 5), t}, true), cfg, params);
  const std::size_t per = e.tokens.size() / 3;
  const auto d = e.tokens.data();
  CHECK(std::equal(d.begin(), d.begin() + per, d.begin() + 2 * per));
  CHECK_FALSE(std::equal(d.begin(), d.begin() + per, d.begin() + per));
}

TEST_CASE("depth zero is patch embedding plus positions") {
  const EncoderConfig cfg = small_encoder(0);
  const ParamStore params = encoder_params(cfg);
  const ImageTensor tile = noise_image(64, 64, 6);
  const Tensor out = encode_tile(tile, cfg, params);
  const Tensor& w = params.get("encoder.patch.w");
  const Tensor& b = params.get("encoder.patch.b");
  const Tensor& pos = params.get("encoder.pos");
  const Tensor& cls = params.get("encoder.cls");
  for (std::size_t c = 0; c < cfg.dim; ++c) CHECK(out(0, c) == cls[c] + pos(0, c));
  const std::size_t g = cfg.grid(), p = cfg.patch_size;
  for (std::size_t gy = 0; gy < g; ++gy)
    for (std::size_t gx = 0; gx < g; ++gx)
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        double acc = 0.0;
        std::size_t k = 0;
        for (std::size_t py = 0; py < p; ++py)
          for (std::size_t px = 0; px < p; ++px)
            for (std::size_t ch = 0; ch < 3; ++ch, ++k) {
              const float v = (tile.at(gy * p + py, gx * p + px, ch) - 0.5f) / 0.5f;
              acc += double(v) * double(w(k, c));
            }
        const std::size_t tok = 1 + gy * g + gx;
        CHECK(out(tok, c) == (float(acc) + b[c]) + pos(tok, c));
      }
}

TEST_CASE("encode is equivariant to tile permutations") {
  const EncoderConfig cfg = small_encoder(1);
  const ParamStore params = encoder_params(cfg);
  std::vector<ImageTensor> tiles;
  for (int i = 0; i < 4; ++i) tiles.push_back(noise_image(64, 64, 10 + i));
  const EmbeddingSet a = encode(batch_of(tiles, false), cfg, params);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<ImageTensor> permuted;
  for (std::size_t p : perm) permuted.push_back(tiles[p]);
  const EmbeddingSet b = encode(batch_of(permuted, false), cfg, params);
  const std::size_t per = a.tokens.size() / 4;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto src = a.tokens.data().begin() + perm[i] * per;
    CHECK(std::equal(src, src + per, b.tokens.data().begin() + i * per));
  }
}

TEST_CASE("encode rejects mismatched tiles and parameters") {
  const EncoderConfig cfg = small_encoder(1);
  const ParamStore params = encoder_params(cfg);
  CHECK_THROWS_AS(encode(batch_of({noise_image(32, 32, 1)}, false), cfg, params), ConfigError);
  EncoderConfig wider = cfg;
  wider.dim = 16;
  CHECK_THROWS_AS(expect_encoder_params(params, wider), ConfigError);
}

TEST_CASE("pixel shuffle on the minimal grid") {
  Tensor t({1, 5, 1}, std::vector<float>{9, 1, 2, 3, 4});
  const ShuffledEmbeddingSet s = pixel_shuffle({t, 2, {{0}, false}});
  CHECK(s.tokens.shape() == Shape{1, 2, 4});
  CHECK(s.tokens(0, 0, 0) == 9.0f);
  CHECK(s.tokens(0, 0, 3) == 9.0f);
  for (std::size_t q = 0; q < 4; ++q) CHECK(s.tokens(0, 1, q) == float(q + 1));
}

TEST_CASE("pixel shuffle follows row-major 2x2 grouping") {
  // G = 4, D = 1, token value = 10*row + col.
  std::vector<float> v{-1};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) v.push_back(float(10 * r + c));
  const ShuffledEmbeddingSet s = pixel_shuffle({Tensor({1, 17, 1}, v), 4, {{0}, false}});
  // merged token (1,0) covers rows 2-3, cols 0-1.
  CHECK(s.tokens(0, 1 + 2, 0) == 20.0f);
  CHECK(s.tokens(0, 1 + 2, 1) == 21.0f);
  CHECK(s.tokens(0, 1 + 2, 2) == 30.0f);
  CHECK(s.tokens(0, 1 + 2, 3) == 31.0f);
}

TEST_CASE("pixel shuffle is a pure rearrangement") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 30; ++i) {
    const std::size_t grid = 2 * (1 + rng() % 7), dim = 1 + rng() % 8, n = 1 + rng() % 5;
    const EmbeddingSet e = random_embedding_set(100 + i, n, grid, dim);
    const ShuffledEmbeddingSet s = pixel_shuffle(e);
    CHECK(s.tokens.shape() == Shape{e.images(), grid * grid / 4 + 1, 4 * dim});
    std::vector<float> in, out;
    for (std::size_t b = 0; b < e.images(); ++b) {
      const auto r = e.tokens.row(b);
      in.insert(in.end(), r.begin() + dim, r.end());
      const auto q = s.tokens.row(b);
      out.insert(out.end(), q.begin() + 4 * dim, q.end());
    }
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    CHECK(in == out);
    CHECK(pixel_unshuffle(s).tokens == e.tokens);
  }
  CHECK(pixel_shuffle(random_embedding_set(1, 2, 14, 64)).tokens.shape() == Shape{3, 50, 256});
}

TEST_CASE("pixel shuffle rejects odd grids") {
  Tensor t({1, 10, 2});
  CHECK_THROWS_AS(pixel_shuffle({t, 3, {{0}, false}}), ConfigError);
}

TEST_CASE("cls_of") {
  const ShuffledEmbeddingSet one = pixel_shuffle(random_embedding_set(5, 1, 2, 3));
  CHECK(cls_of(one, 0).size() == 12);
  const ShuffledEmbeddingSet s = pixel_shuffle(random_embedding_set(6, 3, 4, 3));
  for (std::size_t i = 0; i < s.images(); ++i) {
    const Tensor c = cls_of(s, i);
    for (std::size_t j = 0; j < c.size(); ++j) CHECK(c[j] == s.tokens(i, 0, j));
  }
  CHECK(cls_of(s, 3) == cls_of(s, s.layout.global_index()));
  CHECK_THROWS_AS(cls_of(s, 4), RangeError);
  const Tensor m = cls_matrix(s);
  CHECK(m.shape() == Shape{4, 12});
}
