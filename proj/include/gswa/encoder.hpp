// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gswa/param_store.hpp"
#include "gswa/tensor.hpp"
#include "gswa/tiler.hpp"

namespace gswa {

/// Toy ViT tile encoder. Shapes follow the real pipeline; widths are small.
struct EncoderConfig {
  std::size_t tile_size = 448;
  std::size_t patch_size = 32;
  std::size_t depth = 2;
  std::size_t dim = 64;
  std::size_t heads = 4;

  std::size_t grid() const { return tile_size / patch_size; }
  std::size_t patches() const { return grid() * grid(); }
  std::size_t patch_features() const { return patch_size * patch_size * 3; }

  /// Throws ConfigError on any broken invariant (divisibility, even grid).
  void validate() const;
};

/// Which images the blocks of an embedding tensor came from: the plan
/// indices of the tile blocks, then one global block. When the plan has a
/// single tile and no thumbnail, that tile is itself the global block.
struct BlockLayout {
  std::vector<std::size_t> tile_ids;
  bool has_thumbnail = false;

  std::size_t blocks() const { return has_thumbnail ? tile_ids.size() + 1 : tile_ids.size(); }
  std::size_t global_index() const { return blocks() - 1; }
  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

/// tokens: [images, M+1, D], cls at token 0 of every image.
struct EmbeddingSet {
  Tensor tokens;
  std::size_t grid = 0;
  BlockLayout layout;

  std::size_t images() const { return tokens.dim(0); }
  std::size_t dim() const { return tokens.dim(2); }
};

/// tokens: [images, M/4+1, 4D], cls at token 0 of every image.
struct ShuffledEmbeddingSet {
  Tensor tokens;
  std::size_t grid = 0;  // side of the merged grid, G/2
  BlockLayout layout;

  std::size_t images() const { return tokens.dim(0); }
  std::size_t tokens_per_image() const { return tokens.dim(1); }
  std::size_t patch_tokens() const { return tokens.dim(1) - 1; }
  std::size_t dim() const { return tokens.dim(2); }
};

void init_encoder_params(ParamStore& store, const SeededInit& init, const EncoderConfig& cfg);
void expect_encoder_params(const ParamStore& store, const EncoderConfig& cfg);

/// Flattened, standardised patches of one tile: [M, P*P*3], each patch in
/// (row, col, channel) order and pixels mapped by (v - 0.5) / 0.5.
Tensor extract_patches(const ImageTensor& tile, const EncoderConfig& cfg);

/// One tile to [M+1, D] tokens.
Tensor encode_tile(const ImageTensor& tile, const EncoderConfig& cfg, const ParamStore& params);

EmbeddingSet encode(const TileBatch& batch, const EncoderConfig& cfg, const ParamStore& params);

/// Merges each 2x2 neighbourhood of the patch grid into one token of width
/// 4D, order (0,0),(0,1),(1,0),(1,1). The cls token is tiled four times.
ShuffledEmbeddingSet pixel_shuffle(const EmbeddingSet& e);

/// Exact inverse of pixel_shuffle.
EmbeddingSet pixel_unshuffle(const ShuffledEmbeddingSet& s);

/// cls vector of image `index` (index images()-1 is the global image).
Tensor cls_of(const ShuffledEmbeddingSet& s, std::size_t index);

/// All cls vectors as an [images, 4D] matrix.
Tensor cls_matrix(const ShuffledEmbeddingSet& s);

}  // namespace gswa
