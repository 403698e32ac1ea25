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

#include "wecodec/image.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string_view>

#include "wecodec/byte_io.h"
#include "wecodec/errors.h"

namespace wecodec {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G',
                                           '\r', '\n', 0x1A, '\n'};

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && std::memcmp(b.data(), kPngSignature, 8) == 0;
}

// Reads one PPM header token, skipping whitespace and comments.
class PpmTokens {
 public:
  explicit PpmTokens(std::span<const std::uint8_t> b) : b_(b) {}

  std::string next() {
    for (;;) {
      while (pos_ < b_.size() && std::isspace(b_[pos_])) ++pos_;
      if (pos_ < b_.size() && b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    std::string out;
    while (pos_ < b_.size() && !std::isspace(b_[pos_])) out += b_[pos_++];
    if (out.empty()) throw IoError("ppm: truncated header");
    return out;
  }
  int number() {
    const std::string t = next();
    if (t.size() > 9 ||
        !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw IoError("ppm: bad header field '" + t + "'");
    }
    return std::stoi(t);
  }
  // Position after the single whitespace byte ending the header.
  std::size_t data_start() const { return pos_ + 1; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  PpmTokens tok(bytes);
  if (tok.next() != "P6") throw IoError("ppm: only binary P6 is supported");
  const int w = tok.number();
  const int h = tok.number();
  const int maxval = tok.number();
  if (w <= 0 || h <= 0) throw IoError("ppm: empty image");
  if (maxval != 255) throw IoError("ppm: only 8-bit samples are supported");
  const std::size_t start = tok.data_start();
  const std::size_t need = 3u * static_cast<std::size_t>(w) * h;
  if (start > bytes.size() || bytes.size() - start < need) {
    throw IoError("ppm: truncated pixel data");
  }
  Image img(w, h);
  std::copy_n(bytes.begin() + start, need, img.rgb.begin());
  return img;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw IoError(std::string("png: ") + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw IoError("png: 16-bit samples are not supported");
  }
  // Read as RGBA so alpha is dropped rather than composited.
  png.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgba.data(), 0, nullptr)) {
    throw IoError(std::string("png: ") + png.message);
  }
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  for (std::size_t i = 0, n = img.rgb.size() / 3; i < n; ++i) {
    std::copy_n(&rgba[4 * i], 3, &img.rgb[3 * i]);
  }
  return img;
}

std::vector<std::uint8_t> write_png(int w, int h, std::uint32_t format,
                                    const void* pixels) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw IoError(std::string("png: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels, 0,
                                 nullptr)) {
    throw IoError(std::string("png: ") + png.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

Image decode_image_file(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_ppm(bytes);
  throw IoError("unsupported image format (expected PNG or binary PPM)");
}

std::vector<std::uint8_t> encode_image_file(const Image& image,
                                            ImageFormat format) {
  if (image.width <= 0 || image.height <= 0 ||
      image.rgb.size() != 3u * image.width * image.height) {
    throw ShapeError("image: pixel buffer does not match its size");
  }
  if (format == ImageFormat::kPng) {
    return write_png(image.width, image.height, PNG_FORMAT_RGB,
                     image.rgb.data());
  }
  ByteWriter out;
  out.text("P6\n" + std::to_string(image.width) + " " +
           std::to_string(image.height) + "\n255\n");
  out.bytes(image.rgb);
  return out.take();
}

std::vector<std::uint8_t> encode_gray_png(int width, int height,
                                          std::span<const std::uint8_t> gray) {
  if (width <= 0 || height <= 0 ||
      gray.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("image: pixel buffer does not match its size");
  }
  return write_png(width, height, PNG_FORMAT_GRAY, gray.data());
}

Image read_image(const std::string& path) {
  return decode_image_file(read_file(path));
}

void write_image(const std::string& path, const Image& image) {
  const bool ppm = path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0;
  write_file(path, encode_image_file(image, ppm ? ImageFormat::kPpm
                                                : ImageFormat::kPng));
}

Tensor3 image_to_tensor(const Image& image) {
  Tensor3 t(3, image.height, image.width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        t(c, y, x) = image.at(x, y, c) / 255.0;
      }
    }
  }
  return t;
}

Image tensor_to_image(const Tensor3& t) {
  if (t.channels() != 3) throw ShapeError("image: expected 3 channels");
  Image img(t.width(), t.height());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        const double v = std::clamp(t(c, y, x), 0.0, 1.0);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

int padded_size(int size, int multiple) {
  if (size <= 0 || multiple <= 0) throw ArgumentError("padded_size: bad size");
  return (size + multiple - 1) / multiple * multiple;
}

Tensor3 pad_replicate(const Tensor3& t, int height, int width) {
  if (height < t.height() || width < t.width() || t.empty()) {
    throw ShapeError("pad_replicate: target smaller than input");
  }
  Tensor3 out(t.channels(), height, width);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const int sy = std::min(y, t.height() - 1);
      for (int x = 0; x < width; ++x) {
        out(c, y, x) = t(c, sy, std::min(x, t.width() - 1));
      }
    }
  }
  return out;
}

Tensor3 crop_spatial(const Tensor3& t, int height, int width) {
  if (height > t.height() || width > t.width() || height <= 0 || width <= 0) {
    throw ShapeError("crop_spatial: window outside the tensor");
  }
  Tensor3 out(t.channels(), height, width);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out(c, y, x) = t(c, y, x);
    }
  }
  return out;
}

}  // namespace wecodec
