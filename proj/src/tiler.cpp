// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/tiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "gswa/errors.hpp"

namespace gswa {

std::vector<const ImageTensor*> TileBatch::images() const {
  std::vector<const ImageTensor*> out;
  for (const auto& t : tiles) out.push_back(&t);
  for (const auto& t : thumbnail) out.push_back(&t);
  return out;
}

std::vector<GridRatio> candidate_ratios(int min_tiles, int max_tiles) {
  if (min_tiles < 1 || max_tiles < min_tiles) {
    throw ConfigError("tile bounds must satisfy 1 <= min_tiles <= max_tiles, got " +
                      std::to_string(min_tiles) + ".." + std::to_string(max_tiles));
  }
  std::vector<GridRatio> out;
  for (int c = 1; c <= max_tiles; ++c)
    for (int r = 1; c * r <= max_tiles; ++r)
      if (c * r >= min_tiles) out.push_back({c, r});
  std::sort(out.begin(), out.end(), [](const GridRatio& a, const GridRatio& b) {
    return a.tiles() != b.tiles() ? a.tiles() < b.tiles() : a.cols < b.cols;
  });
  return out;
}

GridRatio match_ratio(std::size_t width, std::size_t height, const std::vector<GridRatio>& candidates,
                      std::size_t tile_size) {
  if (candidates.empty()) throw ConfigError("match_ratio needs at least one candidate");
  if (width == 0 || height == 0) throw InputError("image has zero area");
  const double aspect = double(width) / double(height);
  const double area = double(width) * double(height);
  const double tile_area = double(tile_size) * double(tile_size);
  double best_diff = std::numeric_limits<double>::infinity();
  GridRatio best = candidates.front();
  for (const GridRatio& r : candidates) {
    const double diff = std::abs(aspect - double(r.cols) / double(r.rows));
    if (diff < best_diff) {
      best_diff = diff;
      best = r;
    } else if (diff == best_diff && area > 0.5 * tile_area * r.tiles()) {
      best = r;
    }
  }
  return best;
}

GridRatio match_ratio(const ImageTensor& image, const std::vector<GridRatio>& candidates,
                      std::size_t tile_size) {
  return match_ratio(image.width(), image.height(), candidates, tile_size);
}

CropPlan plan_crop(std::size_t width, std::size_t height, const CropOptions& options) {
  if (options.tile_size == 0 || options.tile_size % 2 != 0) {
    throw ConfigError("tile size must be a positive even number, got " + std::to_string(options.tile_size));
  }
  if (width == 0 || height == 0) throw InputError("image has zero area");
  CropPlan plan;
  plan.ratio = match_ratio(width, height, candidate_ratios(options.min_tiles, options.max_tiles),
                           options.tile_size);
  plan.tile_size = options.tile_size;
  plan.canvas_width = std::size_t(plan.ratio.cols) * options.tile_size;
  plan.canvas_height = std::size_t(plan.ratio.rows) * options.tile_size;
  for (int r = 0; r < plan.ratio.rows; ++r)
    for (int c = 0; c < plan.ratio.cols; ++c)
      plan.tiles.push_back({std::size_t(c) * options.tile_size, std::size_t(r) * options.tile_size,
                            options.tile_size, options.tile_size});
  plan.include_thumbnail = plan.tiles.size() > 1;
  return plan;
}

TileBatch crop(const ImageTensor& image, const CropOptions& options) {
  CropPlan plan = plan_crop(image.width(), image.height(), options);
  ImageTensor canvas = resize_bilinear(image, plan.canvas_width, plan.canvas_height);
  std::vector<ImageTensor> tiles;
  tiles.reserve(plan.tiles.size());
  for (const TileRect& t : plan.tiles) tiles.push_back(canvas.crop(t.x, t.y, t.w, t.h));
  std::vector<ImageTensor> thumb;
  if (plan.include_thumbnail) thumb.push_back(resize_bilinear(image, options.tile_size, options.tile_size));
  return TileBatch{std::move(tiles), std::move(thumb), std::move(canvas), std::move(plan)};
}

std::string plan_to_json(const CropPlan& plan) {
  nlohmann::ordered_json doc;
  doc["ratio"] = {plan.ratio.cols, plan.ratio.rows};
  doc["canvas"] = {plan.canvas_width, plan.canvas_height};
  doc["tiles"] = nlohmann::ordered_json::array();
  for (const TileRect& t : plan.tiles) {
    doc["tiles"].push_back(nlohmann::ordered_json{{"x", t.x}, {"y", t.y}, {"w", t.w}, {"h", t.h}});
  }
  doc["thumbnail"] = plan.include_thumbnail;
  return doc.dump(2);
}

}  // namespace gswa
