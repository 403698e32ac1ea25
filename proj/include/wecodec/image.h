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

// 8-bit RGB images: PNG and binary PPM files, conversion to and from
// normalized tensors, and edge-replicating padding.

#ifndef WECODEC_IMAGE_H_
#define WECODEC_IMAGE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wecodec/tensor.h"

namespace wecodec {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(3u * w * h, 0) {}

  std::uint8_t& at(int x, int y, int c) { return rgb[(y * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(y * width + x) * 3 + c];
  }
  bool operator==(const Image&) const = default;
};

enum class ImageFormat { kPng, kPpm };

// Formats are detected from the file signature. Unsupported files (other
// formats, 16-bit samples, PPM maxval other than 255) throw IoError.
Image decode_image_file(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_image_file(const Image& image,
                                            ImageFormat format);

Image read_image(const std::string& path);
// Format chosen by extension: ".ppm" writes PPM, anything else PNG.
void write_image(const std::string& path, const Image& image);

// 8-bit grayscale PNG, used to exercise gray expansion.
std::vector<std::uint8_t> encode_gray_png(int width, int height,
                                          std::span<const std::uint8_t> gray);

// 3 x H x W tensor with samples / 255.
Tensor3 image_to_tensor(const Image& image);
// Clamps to [0, 1] and rounds to the nearest 8-bit level.
Image tensor_to_image(const Tensor3& t);

// Size rounded up to a multiple of `multiple`.
int padded_size(int size, int multiple);
// Extends the right and bottom edges by replication.
Tensor3 pad_replicate(const Tensor3& t, int height, int width);
// Top-left height x width window.
Tensor3 crop_spatial(const Tensor3& t, int height, int width);

}  // namespace wecodec

#endif  // WECODEC_IMAGE_H_
