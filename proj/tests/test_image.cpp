// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "doctest.h"
#include "gswa/errors.hpp"
#include "gswa/image.hpp"
#include "gswa/io_util.hpp"
#include "support.hpp"

using namespace gswa;
using namespace gswa::testing;

TEST_CASE("image invariants") {
  CHECK_THROWS_AS(ImageTensor(0, 4), InputError);
  CHECK_THROWS_AS(ImageTensor(2, 2, std::vector<float>(12, 1.5f)), InputError);
  CHECK_THROWS_AS(ImageTensor(2, 2, std::vector<float>(11, 0.5f)), InputError);
  const ImageTensor img = ImageTensor::from_rgb8(1, 2, {0, 128, 255, 10, 20, 30});
  CHECK(img.at(0, 0, 2) == 1.0f);
  CHECK(img.at(0, 0, 1) == doctest::Approx(128.0 / 255.0));
  CHECK(img.to_rgb8() == std::vector<std::uint8_t>{0, 128, 255, 10, 20, 30});
  CHECK_THROWS_AS(img.crop(1, 0, 2, 1), DimensionError);
  CHECK(img.crop(1, 0, 1, 1).at(0, 0, 0) == img.at(0, 1, 0));
}

TEST_CASE("PNG round trip is lossless and deterministic") {
  const auto dir = scratch_dir("png");
  const ImageTensor img = noise_image(17, 23, 9);
  save_png(img, dir / "a.png");
  const ImageTensor back = load_image(dir / "a.png");
  CHECK(back == img);
  CHECK(encode_png(img) == read_file(dir / "a.png"));
  CHECK(encode_png(img) == encode_png(back));
}

TEST_CASE("JPEG decoding") {
  const auto dir = scratch_dir("jpeg");
  const ImageTensor img = constant_image(16, 24, 0.2f, 0.6f, 0.9f);
  save_jpeg(img, dir / "a.jpg");
  const ImageTensor back = load_image(dir / "a.jpg");
  CHECK(back.width() == 24);
  CHECK(back.height() == 16);
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(back.at(8, 12, c) - img.at(8, 12, c)) < 0.03);
}

TEST_CASE("unreadable inputs are input errors") {
  const auto dir = scratch_dir("badimg");
  CHECK_THROWS_AS(load_image(dir / "missing.png"), InputError);
  write_file_atomic(dir / "junk.png", "definitely not an image");
  CHECK_THROWS_AS(load_image(dir / "junk.png"), InputError);
  write_file_atomic(dir / "trunc.png", std::string("\x89PNG\r\n\x1a\n", 8) + "xx");
  CHECK_THROWS_AS(load_image(dir / "trunc.png"), InputError);
  write_file_atomic(dir / "trunc.jpg", std::string("\xff\xd8\xff\xe0", 4));
  CHECK_THROWS_AS(load_image(dir / "trunc.jpg"), InputError);
}
