// Copyright 2026 The wecodec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "wecodec/byte_io.h"
#include "wecodec/errors.h"
#include "wecodec/image.h"

namespace wecodec {
namespace {

Image random_image(int w, int h, std::uint64_t seed) {
  SeededRng rng(seed);
  Image img(w, h);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("wecodec_" + name)).string();
}

}  // namespace

TEST_CASE("ppm round trip") {
  const Image img = random_image(37, 21, 1);
  const auto bytes = encode_image_file(img, ImageFormat::kPpm);
  CHECK(decode_image_file(bytes) == img);

  const std::string path = temp_path("rt.ppm");
  write_image(path, img);
  CHECK(read_image(path) == img);
  std::filesystem::remove(path);

  // Comments in the header are skipped.
  std::string with_comment = "P6\n# made by hand\n2 1\n255\n";
  with_comment += std::string("\x01\x02\x03\x04\x05\x06", 6);
  const Image tiny = decode_image_file(std::vector<std::uint8_t>(
      with_comment.begin(), with_comment.end()));
  CHECK(tiny.width == 2);
  CHECK(tiny.at(1, 0, 2) == 6);
}

TEST_CASE("png round trip and gray expansion") {
  const Image img = random_image(19, 33, 2);
  const std::string path = temp_path("rt.png");
  write_image(path, img);
  CHECK(read_image(path) == img);
  std::filesystem::remove(path);

  std::vector<std::uint8_t> gray(5 * 4);
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = static_cast<std::uint8_t>(i * 13);
  const Image g = decode_image_file(encode_gray_png(5, 4, gray));
  REQUIRE(g.width == 5);
  REQUIRE(g.height == 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(g.at(x, y, c) == gray[y * 5 + x]);
    }
  }
}

TEST_CASE("unsupported files") {
  // A 1x1 16-bit RGB PNG (hand-assembled, valid CRCs).
  const std::vector<std::uint8_t> png16 = {
      0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D,
      0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01,
      0x10, 0x02, 0x00, 0x00, 0x00, 0xC0, 0xE7, 0x8F, 0x9D, 0x00, 0x00, 0x00,
      0x0B, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9C, 0x63, 0x60, 0x00, 0x03, 0x00,
      0x00, 0x07, 0x00, 0x01, 0xB2, 0x86, 0xAC, 0xF4, 0x00, 0x00, 0x00, 0x00,
      0x49, 0x45, 0x4E, 0x44, 0xAE, 0x42, 0x60, 0x82};
  CHECK_THROWS_AS(decode_image_file(png16), IoError);

  const std::string bmp = "BM\x10\x00";
  CHECK_THROWS_AS(decode_image_file(std::vector<std::uint8_t>(bmp.begin(), bmp.end())),
                  IoError);
  const std::string p3 = "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(decode_image_file(std::vector<std::uint8_t>(p3.begin(), p3.end())),
                  IoError);
  const std::string deep = "P6\n1 1\n65535\n";
  CHECK_THROWS_AS(decode_image_file(std::vector<std::uint8_t>(deep.begin(), deep.end())),
                  IoError);
  const std::string cut = "P6\n4 4\n255\n\x01\x02";
  CHECK_THROWS_AS(decode_image_file(std::vector<std::uint8_t>(cut.begin(), cut.end())),
                  IoError);
  CHECK_THROWS_AS(read_image(temp_path("does_not_exist.png")), IoError);
}

TEST_CASE("tensor conversion and padding") {
  const Image img = random_image(6, 5, 3);
  const Tensor3 t = image_to_tensor(img);
  CHECK(t.channels() == 3);
  CHECK(t(1, 4, 5) == img.at(5, 4, 1) / 255.0);
  CHECK(tensor_to_image(t) == img);

  Tensor3 out_of_range(3, 1, 2);
  out_of_range(0, 0, 0) = -0.3;
  out_of_range(0, 0, 1) = 1.7;
  out_of_range(1, 0, 0) = 0.5;
  const Image clamped = tensor_to_image(out_of_range);
  CHECK(clamped.at(0, 0, 0) == 0);
  CHECK(clamped.at(1, 0, 0) == 255);
  CHECK(clamped.at(0, 0, 1) == 128);

  CHECK(padded_size(68, 64) == 128);
  CHECK(padded_size(61, 64) == 64);
  CHECK(padded_size(64, 64) == 64);

  const Tensor3 p = pad_replicate(t, 64, 64);
  CHECK(p(2, 63, 63) == t(2, 4, 5));
  CHECK(p(0, 2, 40) == t(0, 2, 5));
  CHECK(p(0, 40, 3) == t(0, 4, 3));
  CHECK(crop_spatial(p, 5, 6) == t);
  CHECK_THROWS_AS(pad_replicate(t, 4, 64), ShapeError);
  CHECK_THROWS_AS(crop_spatial(t, 6, 6), ShapeError);
}

}  // namespace wecodec
