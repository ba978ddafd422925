// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gswa/image.hpp"
#include "gswa/tensor.hpp"
#include "gswa/tiler.hpp"

namespace gswa::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = float(u(rng));
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

inline ImageTensor constant_image(std::size_t h, std::size_t w, float r, float g, float b) {
  ImageTensor img(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      img.at(y, x, 0) = r;
      img.at(y, x, 1) = g;
      img.at(y, x, 2) = b;
    }
  return img;
}

inline ImageTensor noise_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<std::uint8_t> rgb(h * w * 3);
  for (auto& v : rgb) v = std::uint8_t(u(rng));
  return ImageTensor::from_rgb8(h, w, rgb);
}

/// Mid-grey background with a noisy top-left quadrant.
inline ImageTensor detail_quadrant_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  ImageTensor img = constant_image(h, w, 0.5f, 0.5f, 0.5f);
  const ImageTensor noise = noise_image(h / 2, w / 2, seed);
  for (std::size_t y = 0; y < h / 2; ++y)
    for (std::size_t x = 0; x < w / 2; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = noise.at(y, x, c);
  return img;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gswa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Exhaustive reference: every (cols, rows) within the tile budget, the
/// minimal aspect difference, then the documented tie rule over the tied
/// candidates in ascending (tiles, cols) order.
inline GridRatio brute_force_ratio(std::size_t w, std::size_t h, int max_tiles, std::size_t s = 448) {
  const double aspect = double(w) / double(h);
  double best = 1e300;
  for (int c = 1; c <= max_tiles; ++c)
    for (int r = 1; r <= max_tiles; ++r)
      if (c * r <= max_tiles) best = std::min(best, std::abs(aspect - double(c) / r));
  std::vector<GridRatio> tied;
  for (int t = 1; t <= max_tiles; ++t)
    for (int c = 1; c <= t; ++c)
      if (t % c == 0 && std::abs(aspect - double(c) / (t / c)) == best) tied.push_back({c, t / c});
  GridRatio pick = tied.front();
  for (std::size_t i = 1; i < tied.size(); ++i)
    if (double(w) * double(h) > 0.5 * double(s) * double(s) * tied[i].tiles()) pick = tied[i];
  return pick;
}

}  // namespace gswa::testing
