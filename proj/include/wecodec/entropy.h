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

// Quantization, Gaussian symbol tables, rate estimation and range coding.
//
// Symbols are mean-centred residuals k = round(y - mu). Each element gets an
// integer frequency table (total 2^16) derived from its clamped sigma; the
// coder itself never touches floating point, so a given table set yields the
// same bytes everywhere.

#ifndef WECODEC_ENTROPY_H_
#define WECODEC_ENTROPY_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wecodec/autodiff.h"
#include "wecodec/byte_io.h"
#include "wecodec/params.h"
#include "wecodec/tensor.h"

namespace wecodec {

inline constexpr double kSigmaMin = 0.11;
inline constexpr double kSigmaMax = 256.0;
// Largest per-table support; residuals beyond a table's support are escaped.
inline constexpr int kAlphabetHalf = 4096;
inline constexpr int kFreqBits = 16;
inline constexpr std::uint32_t kTotalFreq = 1u << kFreqBits;
// Escaped residuals are sent as raw 16-bit two's complement values.
inline constexpr int kEscapeBits = 16;
inline constexpr std::int32_t kSymbolLimit = 32767;
// Support covers this many standard deviations.
inline constexpr double kSupportSigmas = 6.0;
inline constexpr double kLikelihoodFloor = 1e-9;

double clamp_sigma(double sigma);

// Mass of the unit bin centred at `residual` under N(0, sigma^2):
// Phi((r + .5) / sigma) - Phi((r - .5) / sigma), evaluated through erfc of
// |r| so tails keep relative precision.
double gaussian_likelihood(double residual, double sigma);

struct GaussianParams {
  Tensor3 mu;
  Tensor3 sigma;
  double sigma_min = kSigmaMin;
  double sigma_max = kSigmaMax;
};

// Integer cumulative frequencies over residuals [-support, support] followed
// by one escape bucket. cdf has 2 * support + 3 entries, cdf[0] = 0 and
// cdf.back() = 2^16; every bucket has frequency >= 1.
struct PmfTable {
  int support = 0;
  std::vector<std::uint32_t> cdf;

  int escape_index() const { return 2 * support + 1; }
  int bucket_count() const { return 2 * support + 2; }
  std::uint32_t freq(int index) const { return cdf[index + 1] - cdf[index]; }
  // Bucket for residual k (the escape bucket when |k| > support).
  int index_of(std::int32_t k) const;
};

int table_support(double sigma);

// Table for the clamped sigma. Probabilities are rounded half away from zero
// to the 2^16 grid, raised to 1 where they round to 0, then the total is
// corrected by +-1 steps cycling over the buckets in order of decreasing
// frequency (ties by index), never taking a bucket below 1.
PmfTable pmf_table(double sigma);

// One table per element, with identical sigmas sharing storage.
class TableBank {
 public:
  TableBank() = default;
  explicit TableBank(std::span<const double> sigmas);

  std::size_t size() const { return index_.size(); }
  const PmfTable& operator[](std::size_t i) const { return unique_[index_[i]]; }
  std::size_t unique_count() const { return unique_.size(); }

 private:
  std::vector<PmfTable> unique_;
  std::vector<std::uint32_t> index_;
};

struct Quantized {
  std::vector<std::int32_t> symbols;
  Tensor3 dequant;
};

// Inference rounding: symbols = round(y - mu) (clamped to +-32767),
// dequant = symbols + mu. Throws ShapeError on mismatched shapes.
Quantized quantize(const Tensor3& y, const Tensor3& mu);
Tensor3 dequantize(std::span<const std::int32_t> symbols, const Tensor3& mu);
// Training surrogate: y + u with u uniform in [-0.5, 0.5).
Tensor3 quantize_noise(const Tensor3& y, SeededRng& rng);

// -log2(freq / 2^16), plus kEscapeBits when k is escaped.
double symbol_bits(const PmfTable& table, std::int32_t k);

// Sum of symbol_bits over all elements.
double estimate_rate(std::span<const std::int32_t> symbols,
                     const TableBank& tables);

class RangeEncoder {
 public:
  // Codes the interval [cum, cum + freq) of a 2^16 total.
  void encode(std::uint32_t cum, std::uint32_t freq);
  void encode_symbol(const PmfTable& table, std::int32_t k);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  // Throws DecodeError when the stream is shorter than the coder preamble.
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  std::int32_t decode_symbol(const PmfTable& table);
  // Raw access: value in [0, 2^16) and the matching consume.
  std::uint32_t peek();
  void consume(std::uint32_t cum, std::uint32_t freq);

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t r_ = 0;
};

std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> symbols,
                                       const TableBank& tables);
// Throws DecodeError on a truncated stream.
std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       const TableBank& tables,
                                       std::size_t count);

// Chunk framing: u32 little-endian payload length, then the payload.
void append_chunk(ByteWriter& out, std::span<const std::uint8_t> payload);
std::span<const std::uint8_t> read_chunk(ByteReader& in);

// Differentiable total bits sum(-log2 L(y; mu, sigma)) with L the bin mass of
// gaussian_likelihood floored at kLikelihoodFloor. At floored points the
// gradient is that of -log2 L scaled by L / floor, which keeps it finite
// while still pointing toward larger likelihood.
Var gaussian_bits(Var y, Var mu, Var sigma);

// Per-channel Gaussian prior for the hyper-latent with learned mean and log
// scale.
class FactorizedPrior {
 public:
  FactorizedPrior() = default;
  FactorizedPrior(ParamStore& store, const std::string& name, int channels);

  int channels() const { return channels_; }
  // C x h x w tensors built from the per-channel values.
  Var mu(Tape& tape, int h, int w) const;
  Var sigma(Tape& tape, int h, int w) const;
  Tensor3 mu_value(int h, int w) const;
  Tensor3 sigma_value(int h, int w) const;

 private:
  int channels_ = 0;
  Parameter* mu_ = nullptr;
  Parameter* log_sigma_ = nullptr;
};

}  // namespace wecodec

#endif  // WECODEC_ENTROPY_H_
