// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/encoder.hpp"

#include <algorithm>

#include "gswa/blocks.hpp"
#include "gswa/errors.hpp"
#include "gswa/kernels.hpp"

namespace gswa {

void EncoderConfig::validate() const {
  if (patch_size == 0 || tile_size == 0 || tile_size % patch_size != 0) {
    throw ConfigError("tile size " + std::to_string(tile_size) + " is not a multiple of patch size " +
                      std::to_string(patch_size));
  }
  if (grid() % 2 != 0) {
    throw ConfigError("patch grid side " + std::to_string(grid()) + " must be even for pixel shuffle");
  }
  if (dim < 2) throw ConfigError("encoder width must be at least 2");
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("encoder width " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

void init_encoder_params(ParamStore& store, const SeededInit& init, const EncoderConfig& cfg) {
  cfg.validate();
  init_linear(store, init, "encoder.patch", cfg.patch_features(), cfg.dim);
  store.set("encoder.cls", init.normal("encoder.cls", {cfg.dim}, 0.02));
  store.set("encoder.pos", init.normal("encoder.pos", {cfg.patches() + 1, cfg.dim}, 0.02));
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    init_transformer_block(store, init, "encoder.block" + std::to_string(b), cfg.dim);
  }
}

void expect_encoder_params(const ParamStore& store, const EncoderConfig& cfg) {
  cfg.validate();
  store.expect_shape("encoder.patch.w", {cfg.patch_features(), cfg.dim});
  store.expect_shape("encoder.patch.b", {cfg.dim});
  store.expect_shape("encoder.cls", {cfg.dim});
  store.expect_shape("encoder.pos", {cfg.patches() + 1, cfg.dim});
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    expect_transformer_block(store, "encoder.block" + std::to_string(b), cfg.dim);
  }
}

Tensor extract_patches(const ImageTensor& tile, const EncoderConfig& cfg) {
  if (tile.width() != cfg.tile_size || tile.height() != cfg.tile_size) {
    throw ConfigError("tile is " + std::to_string(tile.width()) + "x" + std::to_string(tile.height()) +
                      ", encoder expects " + std::to_string(cfg.tile_size) + "x" +
                      std::to_string(cfg.tile_size));
  }
  const std::size_t g = cfg.grid(), p = cfg.patch_size;
  Tensor out({cfg.patches(), cfg.patch_features()});
  for (std::size_t gy = 0; gy < g; ++gy) {
    for (std::size_t gx = 0; gx < g; ++gx) {
      auto row = out.row(gy * g + gx);
      std::size_t k = 0;
      for (std::size_t py = 0; py < p; ++py)
        for (std::size_t px = 0; px < p; ++px)
          for (std::size_t c = 0; c < 3; ++c)
            row[k++] = (tile.at(gy * p + py, gx * p + px, c) - 0.5f) / 0.5f;
    }
  }
  return out;
}

Tensor encode_tile(const ImageTensor& tile, const EncoderConfig& cfg, const ParamStore& params) {
  using namespace kernels;
  const Tensor embedded =
      add_bias(matmul(extract_patches(tile, cfg), params.get("encoder.patch.w")), params.get("encoder.patch.b"));
  Tensor x({cfg.patches() + 1, cfg.dim});
  const Tensor& cls = params.get("encoder.cls");
  std::copy(cls.data().begin(), cls.data().end(), x.data().begin());
  std::copy(embedded.data().begin(), embedded.data().end(), x.data().begin() + cfg.dim);
  x = add(x, params.get("encoder.pos"));
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    x = transformer_block(x, params, "encoder.block" + std::to_string(b), cfg.heads);
  }
  return x;
}

EmbeddingSet encode(const TileBatch& batch, const EncoderConfig& cfg, const ParamStore& params) {
  cfg.validate();
  const auto images = batch.images();
  const std::size_t tokens = cfg.patches() + 1;
  Tensor out({images.size(), tokens, cfg.dim});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor t = encode_tile(*images[i], cfg, params);
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + i * tokens * cfg.dim);
  }
  BlockLayout layout;
  for (std::size_t i = 0; i < batch.tiles.size(); ++i) layout.tile_ids.push_back(i);
  layout.has_thumbnail = !batch.thumbnail.empty();
  return EmbeddingSet{std::move(out), cfg.grid(), std::move(layout)};
}

ShuffledEmbeddingSet pixel_shuffle(const EmbeddingSet& e) {
  const std::size_t g = e.grid;
  if (g == 0 || g % 2 != 0) throw ConfigError("pixel shuffle needs an even patch grid, got " + std::to_string(g));
  if (e.tokens.rank() != 3 || e.tokens.dim(1) != g * g + 1) {
    throw DimensionError("embedding tensor " + shape_str(e.tokens.shape()) + " does not match grid " +
                         std::to_string(g));
  }
  const std::size_t n = e.images(), d = e.dim(), h = g / 2;
  Tensor out({n, h * h + 1, 4 * d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < 4; ++q)
      for (std::size_t c = 0; c < d; ++c) out(i, 0, q * d + c) = e.tokens(i, 0, c);
    for (std::size_t oy = 0; oy < h; ++oy) {
      for (std::size_t ox = 0; ox < h; ++ox) {
        const std::size_t dst = 1 + oy * h + ox;
        for (std::size_t q = 0; q < 4; ++q) {
          const std::size_t src = 1 + (2 * oy + q / 2) * g + (2 * ox + q % 2);
          for (std::size_t c = 0; c < d; ++c) out(i, dst, q * d + c) = e.tokens(i, src, c);
        }
      }
    }
  }
  return ShuffledEmbeddingSet{std::move(out), h, e.layout};
}

EmbeddingSet pixel_unshuffle(const ShuffledEmbeddingSet& s) {
  const std::size_t h = s.grid, g = 2 * h;
  if (s.tokens.rank() != 3 || s.tokens.dim(1) != h * h + 1 || s.dim() % 4 != 0) {
    throw DimensionError("shuffled tensor " + shape_str(s.tokens.shape()) + " does not match grid " +
                         std::to_string(h));
  }
  const std::size_t n = s.images(), d = s.dim() / 4;
  Tensor out({n, g * g + 1, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) out(i, 0, c) = s.tokens(i, 0, c);
    for (std::size_t oy = 0; oy < h; ++oy)
      for (std::size_t ox = 0; ox < h; ++ox)
        for (std::size_t q = 0; q < 4; ++q) {
          const std::size_t dst = 1 + (2 * oy + q / 2) * g + (2 * ox + q % 2);
          for (std::size_t c = 0; c < d; ++c) out(i, dst, c) = s.tokens(i, 1 + oy * h + ox, q * d + c);
        }
  }
  return EmbeddingSet{std::move(out), g, s.layout};
}

Tensor cls_of(const ShuffledEmbeddingSet& s, std::size_t index) {
  if (index >= s.images()) {
    throw RangeError("cls index " + std::to_string(index) + " out of range for " +
                     std::to_string(s.images()) + " images");
  }
  const std::size_t d = s.dim();
  const auto begin = s.tokens.data().begin() + index * s.tokens_per_image() * d;
  return Tensor({d}, std::vector<float>(begin, begin + d));
}

Tensor cls_matrix(const ShuffledEmbeddingSet& s) {
  Tensor out({s.images(), s.dim()});
  for (std::size_t i = 0; i < s.images(); ++i) {
    const Tensor c = cls_of(s, i);
    std::copy(c.data().begin(), c.data().end(), out.row(i).begin());
  }
  return out;
}

}  // namespace gswa
