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

// Bitstream container and whole-image encode / decode.
//
// Layout: a fixed 25-byte header, the hyper-latent chunk, then one chunk per
// latent slice in coding order. A chunk is a u32 little-endian payload
// length followed by the payload.
//
//   offset  size  field
//   0       4     magic "3DWC"
//   4       1     version (1)
//   5       1     spatial wavelet id
//   6       1     wavelet levels of the transform layers
//   7       1     profile id (0 toy, 1 paper)
//   8       4     original width
//   12      4     original height
//   16      1     lambda index (0xFF: not on the standard grid)
//   17      8     model checksum

#ifndef WECODEC_CODEC_H_
#define WECODEC_CODEC_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wecodec/image.h"
#include "wecodec/model.h"

namespace wecodec {

inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr std::size_t kHeaderSize = 25;

struct BitstreamHeader {
  std::uint8_t version = kBitstreamVersion;
  WaveletKind wavelet = WaveletKind::kCdf97;
  std::uint8_t levels = 2;
  Profile profile = Profile::kToy;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t lambda_index = kNoLambdaIndex;
  std::uint64_t checksum = 0;

  bool operator==(const BitstreamHeader&) const = default;
};

std::vector<std::uint8_t> serialize_header(const BitstreamHeader& h);
// Throws DecodeError on short input, bad magic, unknown version or
// out-of-range fields.
BitstreamHeader parse_header(std::span<const std::uint8_t> bytes);

struct Bitstream {
  BitstreamHeader header;
  std::vector<std::uint8_t> z_chunk;
  std::vector<std::vector<std::uint8_t>> slice_chunks;
};

std::vector<std::uint8_t> write_bitstream(const Bitstream& b);
// Throws DecodeError on truncation or trailing bytes.
Bitstream read_bitstream(std::span<const std::uint8_t> bytes);

// Header for `model` and an image of the given size.
BitstreamHeader make_header(const CodecModel& model, int width, int height);
// Throws ConfigError when the header was not produced by `model`.
void check_header(const BitstreamHeader& h, const CodecModel& model);
// Throws ConfigError when the model was built for another profile.
void require_profile(const CodecModel& model, Profile profile);

// Optional encoder-side values for inspection.
struct EncodeTrace {
  Tensor3 y_hat;
  std::vector<double> slice_estimated_bits;
  double z_estimated_bits = 0.0;
};

std::vector<std::uint8_t> encode_image(const Image& image,
                                       const CodecModel& model,
                                       EncodeTrace* trace = nullptr);
// Throws ConfigError on a checksum or config mismatch and DecodeError on a
// malformed stream. y_hat, when given, receives the decoded latent.
Image decode_image(std::span<const std::uint8_t> bytes, const CodecModel& model,
                   Tensor3* y_hat = nullptr);

struct RateRow {
  std::string label;  // subband name, "z" or "total"
  double bits = 0.0;
  double bpp = 0.0;
  double percent = 0.0;
};

struct RDReport {
  int width = 0;
  int height = 0;
  // Subbands in coding order, then "z" (header plus hyper-latent chunk),
  // then "total".
  std::vector<RateRow> rows;
  double total_bpp = 0.0;
  std::optional<double> psnr_db;
  std::optional<double> ms_ssim_db;

  const RateRow& row(const std::string& label) const;
  // Share of latent (non-z) bits carried by the given subbands.
  double latent_share(std::span<const std::string> labels) const;
};

// Rates come from actual chunk sizes, each including its length prefix.
// Quality is measured against `reference` when given; MS-SSIM is omitted for
// images smaller than the MS-SSIM minimum.
RDReport report_subbands(std::span<const std::uint8_t> bytes,
                         const CodecModel& model,
                         const Image* reference = nullptr);
// Tab-separated rows: label, bpp, percent; then PSNR and MS-SSIM lines.
std::string format_report(const RDReport& report);

}  // namespace wecodec

#endif  // WECODEC_CODEC_H_
