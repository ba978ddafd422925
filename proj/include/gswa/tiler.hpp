// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gswa/image.hpp"

namespace gswa {

struct GridRatio {
  int cols = 1;
  int rows = 1;

  int tiles() const { return cols * rows; }
  friend bool operator==(const GridRatio&, const GridRatio&) = default;
};

struct TileRect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
  friend bool operator==(const TileRect&, const TileRect&) = default;
};

struct CropOptions {
  std::size_t tile_size = 448;
  int min_tiles = 1;
  int max_tiles = 8;
};

/// Chosen grid, the canvas it implies and the tile rectangles in row-major
/// order (index = row * cols + col). A thumbnail is added only when the grid
/// has more than one tile.
struct CropPlan {
  GridRatio ratio;
  std::size_t tile_size = 0;
  std::size_t canvas_width = 0;
  std::size_t canvas_height = 0;
  std::vector<TileRect> tiles;
  bool include_thumbnail = false;

  std::size_t tile_count() const { return tiles.size(); }
  std::size_t row_of(std::size_t index) const { return index / std::size_t(ratio.cols); }
  std::size_t col_of(std::size_t index) const { return index % std::size_t(ratio.cols); }
};

struct TileBatch {
  std::vector<ImageTensor> tiles;
  std::vector<ImageTensor> thumbnail;  // empty or exactly one image
  ImageTensor canvas;                  // the resized image the tiles were cut from
  CropPlan plan;

  /// Tiles followed by the thumbnail, the order the encoder consumes.
  std::vector<const ImageTensor*> images() const;
};

/// All grids with min_tiles <= cols*rows <= max_tiles, sorted by (cols*rows, cols).
std::vector<GridRatio> candidate_ratios(int min_tiles, int max_tiles);

/// The candidate whose cols/rows is closest to width/height. On exact ties a
/// later (larger) candidate wins only if the image area exceeds half of that
/// candidate's canvas area.
GridRatio match_ratio(std::size_t width, std::size_t height, const std::vector<GridRatio>& candidates,
                      std::size_t tile_size = 448);
GridRatio match_ratio(const ImageTensor& image, const std::vector<GridRatio>& candidates,
                      std::size_t tile_size = 448);

CropPlan plan_crop(std::size_t width, std::size_t height, const CropOptions& options = {});
TileBatch crop(const ImageTensor& image, const CropOptions& options = {});

/// {"ratio":[c,r],"canvas":[w,h],"tiles":[{"x","y","w","h"}...],"thumbnail":bool}
std::string plan_to_json(const CropPlan& plan);

}  // namespace gswa
