// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gswa {

/// H x W x 3 image with interleaved channels and values in [0, 1].
class ImageTensor {
 public:
  static constexpr std::size_t kChannels = 3;

  ImageTensor(std::size_t height, std::size_t width, float fill = 0.0f);
  ImageTensor(std::size_t height, std::size_t width, std::vector<float> data);

  /// 8-bit interleaved RGB to [0, 1].
  static ImageTensor from_rgb8(std::size_t height, std::size_t width,
                               const std::vector<std::uint8_t>& rgb);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return kChannels; }

  float& at(std::size_t y, std::size_t x, std::size_t c) { return data_[(y * width_ + x) * kChannels + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * width_ + x) * kChannels + c];
  }

  const std::vector<float>& data() const { return data_; }

  /// Copy of the rectangle [x, x+w) x [y, y+h).
  ImageTensor crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const;

  /// Rounds each value to the nearest of 256 levels.
  std::vector<std::uint8_t> to_rgb8() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  void validate() const;

  std::size_t height_;
  std::size_t width_;
  std::vector<float> data_;
};

/// Bilinear resampling with half-pixel centres and edge clamping.
ImageTensor resize_bilinear(const ImageTensor& src, std::size_t out_width, std::size_t out_height);

/// Decodes an 8-bit PNG or JPEG (detected from the file signature).
/// Throws InputError for missing or undecodable files.
ImageTensor load_image(const std::filesystem::path& path);

/// Encodes 8-bit RGB PNG bytes; deterministic for identical input.
std::string encode_png(const ImageTensor& image);
void save_png(const ImageTensor& image, const std::filesystem::path& path);
void save_jpeg(const ImageTensor& image, const std::filesystem::path& path, int quality = 95);

}  // namespace gswa
