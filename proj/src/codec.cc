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

#include "wecodec/codec.h"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "wecodec/byte_io.h"
#include "wecodec/errors.h"
#include "wecodec/metrics.h"

namespace wecodec {
namespace {

constexpr char kMagic[4] = {'3', 'D', 'W', 'C'};
constexpr std::uint32_t kMaxSide = 1u << 16;
constexpr std::size_t kChunkPrefix = 4;

}  // namespace

std::vector<std::uint8_t> serialize_header(const BitstreamHeader& h) {
  ByteWriter out;
  out.text(std::string_view(kMagic, 4));
  out.u8(h.version);
  out.u8(static_cast<std::uint8_t>(h.wavelet));
  out.u8(h.levels);
  out.u8(static_cast<std::uint8_t>(h.profile));
  out.u32(h.width);
  out.u32(h.height);
  out.u8(h.lambda_index);
  out.u64(h.checksum);
  return out.take();
}

BitstreamHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw DecodeError("bitstream: short header");
  ByteReader in(bytes.first(kHeaderSize));
  if (in.text(4) != std::string_view(kMagic, 4)) {
    throw DecodeError("bitstream: bad magic");
  }
  BitstreamHeader h;
  h.version = in.u8();
  if (h.version != kBitstreamVersion) {
    throw DecodeError("bitstream: unsupported version " +
                      std::to_string(h.version));
  }
  const std::uint8_t wavelet = in.u8();
  if (wavelet > static_cast<std::uint8_t>(WaveletKind::kCdf97)) {
    throw DecodeError("bitstream: unknown wavelet id");
  }
  h.wavelet = static_cast<WaveletKind>(wavelet);
  h.levels = in.u8();
  const std::uint8_t profile = in.u8();
  if (profile > 1) throw DecodeError("bitstream: unknown profile id");
  h.profile = static_cast<Profile>(profile);
  h.width = in.u32();
  h.height = in.u32();
  if (h.width == 0 || h.height == 0 || h.width > kMaxSide ||
      h.height > kMaxSide) {
    throw DecodeError("bitstream: image size out of range");
  }
  h.lambda_index = in.u8();
  h.checksum = in.u64();
  return h;
}

std::vector<std::uint8_t> write_bitstream(const Bitstream& b) {
  ByteWriter out;
  out.bytes(serialize_header(b.header));
  append_chunk(out, b.z_chunk);
  for (const auto& c : b.slice_chunks) append_chunk(out, c);
  return out.take();
}

Bitstream read_bitstream(std::span<const std::uint8_t> bytes) {
  Bitstream b;
  b.header = parse_header(bytes);
  ByteReader in(bytes.subspan(kHeaderSize));
  auto chunk = [&in] {
    const auto c = read_chunk(in);
    return std::vector<std::uint8_t>(c.begin(), c.end());
  };
  b.z_chunk = chunk();
  for (int k = 0; k < kSliceCount; ++k) b.slice_chunks.push_back(chunk());
  if (in.remaining() != 0) throw DecodeError("bitstream: trailing bytes");
  return b;
}

BitstreamHeader make_header(const CodecModel& model, int width, int height) {
  const ModelConfig& cfg = model.config();
  BitstreamHeader h;
  h.wavelet = cfg.spatial_kind;
  h.levels = static_cast<std::uint8_t>(cfg.weconv_levels);
  h.profile = cfg.profile;
  h.width = static_cast<std::uint32_t>(width);
  h.height = static_cast<std::uint32_t>(height);
  h.lambda_index = lambda_index(cfg.lambda);
  h.checksum = model.checksum();
  return h;
}

void check_header(const BitstreamHeader& h, const CodecModel& model) {
  const ModelConfig& cfg = model.config();
  if (h.profile != cfg.profile) {
    throw ConfigError("bitstream was written for the " +
                      std::string(profile_name(h.profile)) + " profile");
  }
  if (h.wavelet != cfg.spatial_kind || h.levels != cfg.weconv_levels ||
      h.lambda_index != lambda_index(cfg.lambda)) {
    throw ConfigError("bitstream settings do not match the model");
  }
  if (h.checksum != model.checksum()) {
    throw ConfigError("model checksum mismatch");
  }
}

void require_profile(const CodecModel& model, Profile profile) {
  if (model.config().profile != profile) {
    throw ConfigError("model profile is " +
                      std::string(profile_name(model.config().profile)) +
                      ", expected " + std::string(profile_name(profile)));
  }
}

std::vector<std::uint8_t> encode_image(const Image& image,
                                       const CodecModel& model,
                                       EncodeTrace* trace) {
  const int ph = padded_size(image.height, kSizeMultiple);
  const int pw = padded_size(image.width, kSizeMultiple);
  const Tensor3 x = pad_replicate(image_to_tensor(image), ph, pw);

  Tape tape;
  const Tensor3 y = model.analysis(tape, tape.constant(x)).value();
  const Tensor3 z = model.hyper_analysis(tape, tape.constant(y)).value();
  const FactorizedPrior& prior = model.hyper_prior();
  const Quantized qz = quantize(z, prior.mu_value(z.height(), z.width()));
  const Tensor3 z_sigma = prior.sigma_value(z.height(), z.width());
  const TableBank z_tables(z_sigma.data());

  Bitstream b;
  b.header = make_header(model, image.width, image.height);
  b.z_chunk = range_encode(qz.symbols, z_tables);
  const Tensor3 hyper =
      model.hyper_synthesis(tape, tape.constant(qz.dequant)).value();
  CharmEncoded enc = model.entropy_model().encode(y, hyper);
  b.slice_chunks = std::move(enc.chunks);
  if (trace != nullptr) {
    trace->y_hat = std::move(enc.y_hat);
    trace->slice_estimated_bits = std::move(enc.estimated_bits);
    trace->z_estimated_bits = estimate_rate(qz.symbols, z_tables);
  }
  return write_bitstream(b);
}

Image decode_image(std::span<const std::uint8_t> bytes, const CodecModel& model,
                   Tensor3* y_hat) {
  const Bitstream b = read_bitstream(bytes);
  check_header(b.header, model);
  const int ph = padded_size(static_cast<int>(b.header.height), kSizeMultiple);
  const int pw = padded_size(static_cast<int>(b.header.width), kSizeMultiple);
  const int lh = ph / 16;
  const int lw = pw / 16;

  const FactorizedPrior& prior = model.hyper_prior();
  const Tensor3 z_mu = prior.mu_value(lh / 4, lw / 4);
  const TableBank z_tables(prior.sigma_value(lh / 4, lw / 4).data());
  const Tensor3 z_hat =
      dequantize(range_decode(b.z_chunk, z_tables, z_mu.size()), z_mu);

  Tape tape;
  const Tensor3 hyper = model.hyper_synthesis(tape, tape.constant(z_hat)).value();
  std::vector<std::span<const std::uint8_t>> chunks(b.slice_chunks.begin(),
                                                    b.slice_chunks.end());
  Tensor3 latent = model.entropy_model().decode(chunks, hyper, lh, lw);
  const Tensor3 x_hat = model.synthesis(tape, tape.constant(latent)).value();
  if (y_hat != nullptr) *y_hat = std::move(latent);
  return tensor_to_image(crop_spatial(x_hat, static_cast<int>(b.header.height),
                                      static_cast<int>(b.header.width)));
}

const RateRow& RDReport::row(const std::string& label) const {
  for (const RateRow& r : rows) {
    if (r.label == label) return r;
  }
  throw ArgumentError("report has no row '" + label + "'");
}

double RDReport::latent_share(std::span<const std::string> labels) const {
  double latent = 0.0;
  double selected = 0.0;
  for (const RateRow& r : rows) {
    if (r.label == "z" || r.label == "total") continue;
    latent += r.bits;
    if (std::find(labels.begin(), labels.end(), r.label) != labels.end()) {
      selected += r.bits;
    }
  }
  return latent > 0.0 ? selected / latent : 0.0;
}

RDReport report_subbands(std::span<const std::uint8_t> bytes,
                         const CodecModel& model, const Image* reference) {
  const Bitstream b = read_bitstream(bytes);
  const Image decoded = decode_image(bytes, model);
  RDReport rep;
  rep.width = static_cast<int>(b.header.width);
  rep.height = static_cast<int>(b.header.height);
  const double pixels = static_cast<double>(rep.width) * rep.height;
  const double total_bits = 8.0 * static_cast<double>(bytes.size());

  const SlicePlan& plan = model.entropy_model().plan();
  for (int k = 0; k < kSliceCount; ++k) {
    const std::string& label = plan.slices[k].subband;
    const double bits = 8.0 * (kChunkPrefix + b.slice_chunks[k].size());
    auto it = std::find_if(rep.rows.begin(), rep.rows.end(),
                           [&](const RateRow& r) { return r.label == label; });
    if (it == rep.rows.end()) {
      rep.rows.push_back({label, bits});
    } else {
      it->bits += bits;
    }
  }
  rep.rows.push_back({"z", 8.0 * (kHeaderSize + kChunkPrefix + b.z_chunk.size())});
  rep.rows.push_back({"total", total_bits});
  for (RateRow& r : rep.rows) {
    r.bpp = r.bits / pixels;
    r.percent = 100.0 * r.bits / total_bits;
  }
  rep.total_bpp = total_bits / pixels;

  if (reference != nullptr) {
    if (reference->width != rep.width || reference->height != rep.height) {
      throw ShapeError("report: reference size differs from the bitstream");
    }
    const Tensor3 a = image_to_tensor(*reference);
    const Tensor3 d = image_to_tensor(decoded);
    rep.psnr_db = psnr(a, d);
    if (std::min(rep.width, rep.height) >= kMsSsimMinSide) {
      rep.ms_ssim_db = ms_ssim_db(ms_ssim(a, d));
    }
  }
  return rep;
}

std::string format_report(const RDReport& report) {
  std::string out = "subband\tbpp\tpercent\n";
  char line[128];
  for (const RateRow& r : report.rows) {
    std::snprintf(line, sizeof(line), "%s\t%.4f\t%.1f\n", r.label.c_str(),
                  r.bpp, r.percent);
    out += line;
  }
  auto metric = [&](const char* name, const std::optional<double>& v) {
    if (v.has_value()) {
      std::snprintf(line, sizeof(line), "%s\t%.4f\n", name, *v);
    } else {
      std::snprintf(line, sizeof(line), "%s\tn/a\n", name);
    }
    out += line;
  };
  metric("PSNR_dB", report.psnr_db);
  metric("MS-SSIM_dB", report.ms_ssim_db);
  return out;
}

}  // namespace wecodec
