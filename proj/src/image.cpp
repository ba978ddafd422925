// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "gswa/errors.hpp"
#include "gswa/io_util.hpp"

namespace gswa {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, float fill)
    : height_(height), width_(width), data_(height * width * kChannels, fill) {
  validate();
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  validate();
}

void ImageTensor::validate() const {
  if (height_ == 0 || width_ == 0) throw InputError("image must have positive width and height");
  if (data_.size() != height_ * width_ * kChannels) {
    throw InputError("image data length does not match " + std::to_string(width_) + "x" +
                     std::to_string(height_) + "x3");
  }
  for (float v : data_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw InputError("image values must lie in [0, 1]");
  }
}

ImageTensor ImageTensor::from_rgb8(std::size_t height, std::size_t width,
                                   const std::vector<std::uint8_t>& rgb) {
  std::vector<float> data(rgb.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) data[i] = float(rgb[i]) / 255.0f;
  return ImageTensor(height, width, std::move(data));
}

ImageTensor ImageTensor::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
  if (w == 0 || h == 0 || x + w > width_ || y + h > height_) {
    throw DimensionError("crop rectangle outside the image");
  }
  std::vector<float> out(w * h * kChannels);
  for (std::size_t r = 0; r < h; ++r) {
    const float* src = data_.data() + ((y + r) * width_ + x) * kChannels;
    std::copy(src, src + w * kChannels, out.begin() + r * w * kChannels);
  }
  return ImageTensor(h, w, std::move(out));
}

std::vector<std::uint8_t> ImageTensor::to_rgb8() const {
  std::vector<std::uint8_t> out(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(data_[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double t;
};

std::vector<Tap> taps(std::size_t in, std::size_t out) {
  std::vector<Tap> result(out);
  const double ratio = double(in) / double(out);
  for (std::size_t i = 0; i < out; ++i) {
    double s = (double(i) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, double(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, in - 1);
    result[i] = {lo, hi, s - double(lo)};
  }
  return result;
}

// a + t(b - a) returns a exactly when a == b, so flat regions stay flat.
inline double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

ImageTensor resize_bilinear(const ImageTensor& src, std::size_t out_width, std::size_t out_height) {
  if (out_width == 0 || out_height == 0) throw InputError("resize target must be non-empty");
  const auto xs = taps(src.width(), out_width);
  const auto ys = taps(src.height(), out_height);
  std::vector<float> out(out_width * out_height * ImageTensor::kChannels);
  std::size_t idx = 0;
  for (const Tap& ty : ys) {
    for (const Tap& tx : xs) {
      for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        const double top = lerp(src.at(ty.lo, tx.lo, c), src.at(ty.lo, tx.hi, c), tx.t);
        const double bottom = lerp(src.at(ty.hi, tx.lo, c), src.at(ty.hi, tx.hi, c), tx.t);
        out[idx++] = std::clamp(static_cast<float>(lerp(top, bottom, ty.t)), 0.0f, 1.0f);
      }
    }
  }
  return ImageTensor(out_height, out_width, std::move(out));
}

namespace {

ImageTensor decode_png(const std::string& bytes, const std::string& name) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw InputError("cannot decode PNG " + name + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw InputError("cannot decode PNG " + name + ": " + msg);
  }
  return ImageTensor::from_rgb8(img.height, img.width, rgb);
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Recoverable warnings (e.g. a truncated scan) are not printed.
void jpeg_quiet(j_common_ptr) {}

ImageTensor decode_jpeg(const std::string& bytes, const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = jpeg_quiet;
  std::vector<std::uint8_t> rgb;
  std::size_t width = 0, height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw InputError("cannot decode JPEG " + name + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = cinfo.output_width;
  height = cinfo.output_height;
  rgb.resize(width * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + std::size_t(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return ImageTensor::from_rgb8(height, width, rgb);
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const FormatError&) {
    throw InputError("cannot read image " + path.string());
  }
  static constexpr unsigned char kPng[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPng, 4) == 0) return decode_png(bytes, path.string());
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8 && static_cast<unsigned char>(bytes[2]) == 0xFF) {
    return decode_jpeg(bytes, path.string());
  }
  throw InputError("unrecognised image format: " + path.string());
}

std::string encode_png(const ImageTensor& image) {
  const auto rgb = image.to_rgb8();
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encoding failed: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encoding failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

void save_png(const ImageTensor& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(image));
}

void save_jpeg(const ImageTensor& image, const std::filesystem::path& path, int quality) {
  auto rgb = image.to_rgb8();
  jpeg_compress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = jpeg_quiet;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw FormatError(std::string("JPEG encoding failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width());
  cinfo.image_height = static_cast<JDIMENSION>(image.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = rgb.data() + std::size_t(cinfo.next_scanline) * image.width() * 3;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::string bytes(reinterpret_cast<const char*>(buffer), size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  write_file_atomic(path, bytes);
}

}  // namespace gswa
