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

#include "wecodec/entropy.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "wecodec/errors.h"

namespace wecodec {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

}  // namespace

double clamp_sigma(double sigma) {
  if (std::isnan(sigma)) return kSigmaMax;
  return std::clamp(sigma, kSigmaMin, kSigmaMax);
}

double gaussian_likelihood(double residual, double sigma) {
  const double a = std::fabs(residual);
  const double k = kInvSqrt2 / sigma;
  return 0.5 * (std::erfc((a - 0.5) * k) - std::erfc((a + 0.5) * k));
}

int PmfTable::index_of(std::int32_t k) const {
  if (k < -support || k > support) return escape_index();
  return k + support;
}

int table_support(double sigma) {
  const double t = std::ceil(kSupportSigmas * clamp_sigma(sigma));
  return static_cast<int>(std::clamp(t, 1.0, static_cast<double>(kAlphabetHalf)));
}

PmfTable pmf_table(double sigma) {
  const double s = clamp_sigma(sigma);
  PmfTable table;
  table.support = table_support(s);
  const int n = table.bucket_count();
  std::vector<std::int64_t> f(n);
  std::int64_t total = 0;
  for (int i = 0; i < n; ++i) {
    double p;
    if (i == table.escape_index()) {
      p = std::erfc((table.support + 0.5) * kInvSqrt2 / s);
    } else {
      p = gaussian_likelihood(i - table.support, s);
    }
    f[i] = std::max<std::int64_t>(1, std::llround(p * kTotalFreq));
    total += f[i];
  }
  std::int64_t diff = static_cast<std::int64_t>(kTotalFreq) - total;
  if (diff != 0) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&f](int a, int b) { return f[a] > f[b]; });
    for (std::size_t j = 0; diff != 0; j = (j + 1) % order.size()) {
      std::int64_t& v = f[order[j]];
      if (diff > 0) {
        ++v;
        --diff;
      } else if (v > 1) {
        --v;
        ++diff;
      }
    }
  }
  table.cdf.resize(n + 1);
  table.cdf[0] = 0;
  for (int i = 0; i < n; ++i) {
    table.cdf[i + 1] = table.cdf[i] + static_cast<std::uint32_t>(f[i]);
  }
  return table;
}

TableBank::TableBank(std::span<const double> sigmas) {
  std::unordered_map<std::uint64_t, std::uint32_t> seen;
  index_.reserve(sigmas.size());
  for (double s : sigmas) {
    const double c = clamp_sigma(s);
    const std::uint64_t key = std::bit_cast<std::uint64_t>(c);
    auto it = seen.find(key);
    if (it == seen.end()) {
      it = seen.emplace(key, static_cast<std::uint32_t>(unique_.size())).first;
      unique_.push_back(pmf_table(c));
    }
    index_.push_back(it->second);
  }
}

Quantized quantize(const Tensor3& y, const Tensor3& mu) {
  if (!y.same_shape(mu)) throw ShapeError("quantize: y and mu differ in shape");
  Quantized q;
  q.symbols.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long long k = std::llround(y[i] - mu[i]);
    q.symbols[i] = static_cast<std::int32_t>(
        std::clamp<long long>(k, -kSymbolLimit, kSymbolLimit));
  }
  q.dequant = dequantize(q.symbols, mu);
  return q;
}

Tensor3 dequantize(std::span<const std::int32_t> symbols, const Tensor3& mu) {
  if (symbols.size() != mu.size()) {
    throw ShapeError("dequantize: symbol count does not match mu");
  }
  Tensor3 out = mu;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += symbols[i];
  return out;
}

Tensor3 quantize_noise(const Tensor3& y, SeededRng& rng) {
  Tensor3 out =
      seeded_uniform(rng, y.channels(), y.height(), y.width(), -0.5, 0.5);
  out += y;
  return out;
}

double symbol_bits(const PmfTable& table, std::int32_t k) {
  const int idx = table.index_of(k);
  double bits = kFreqBits - std::log2(static_cast<double>(table.freq(idx)));
  if (idx == table.escape_index()) bits += kEscapeBits;
  return bits;
}

double estimate_rate(std::span<const std::int32_t> symbols,
                     const TableBank& tables) {
  if (symbols.size() != tables.size()) {
    throw ShapeError("estimate_rate: symbol and table counts differ");
  }
  double bits = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    bits += symbol_bits(tables[i], symbols[i]);
  }
  return bits;
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq) {
  const std::uint32_t r = range_ >> kFreqBits;
  low_ += static_cast<std::uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_symbol(const PmfTable& table, std::int32_t k) {
  const int idx = table.index_of(k);
  encode(table.cdf[idx], table.freq(idx));
  if (idx == table.escape_index()) {
    const std::int32_t v = std::clamp(k, -kSymbolLimit, kSymbolLimit);
    encode(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)), 1);
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= in_.size()) throw DecodeError("range decoder: truncated stream");
  return in_[pos_++];
}

std::uint32_t RangeDecoder::peek() {
  r_ = range_ >> kFreqBits;
  return std::min<std::uint32_t>(code_ / r_, kTotalFreq - 1);
}

void RangeDecoder::consume(std::uint32_t cum, std::uint32_t freq) {
  code_ -= r_ * cum;
  range_ = r_ * freq;
  while (range_ < (1u << 24)) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

std::int32_t RangeDecoder::decode_symbol(const PmfTable& table) {
  const std::uint32_t v = peek();
  const auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), v);
  const int idx = static_cast<int>(it - table.cdf.begin()) - 1;
  consume(table.cdf[idx], table.freq(idx));
  if (idx != table.escape_index()) return idx - table.support;
  const std::uint32_t raw = peek();
  consume(raw, 1);
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(raw));
}

std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> symbols,
                                       const TableBank& tables) {
  if (symbols.size() != tables.size()) {
    throw ShapeError("range_encode: symbol and table counts differ");
  }
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    enc.encode_symbol(tables[i], symbols[i]);
  }
  return enc.finish();
}

std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       const TableBank& tables,
                                       std::size_t count) {
  if (count != tables.size()) {
    throw ShapeError("range_decode: symbol and table counts differ");
  }
  RangeDecoder dec(bytes);
  std::vector<std::int32_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = dec.decode_symbol(tables[i]);
  return out;
}

void append_chunk(ByteWriter& out, std::span<const std::uint8_t> payload) {
  out.u32(static_cast<std::uint32_t>(payload.size()));
  out.bytes(payload);
}

std::span<const std::uint8_t> read_chunk(ByteReader& in) {
  const std::uint32_t n = in.u32();
  return in.bytes(n);
}

Var gaussian_bits(Var y, Var mu, Var sigma) {
  Tape* t = y.tape();
  const Tensor3& yv = y.value();
  const Tensor3& mv = mu.value();
  const Tensor3& sv = sigma.value();
  if (!yv.same_shape(mv) || !yv.same_shape(sv)) {
    throw ShapeError("gaussian_bits: shape mismatch");
  }
  double bits = 0.0;
  for (std::size_t i = 0; i < yv.size(); ++i) {
    if (!(sv[i] > 0.0)) throw NumericError("gaussian_bits: sigma must be > 0");
    const double r = yv[i] - mv[i];
    const double l = gaussian_likelihood(r, sv[i]);
    bits -= std::log2(std::max(l, kLikelihoodFloor));
    t->mix_branch((r > 0.0 ? 1 : (r < 0.0 ? 2 : 0)) + (l < kLikelihoodFloor ? 4 : 0));
  }
  if (!std::isfinite(bits)) throw NumericError("gaussian_bits: non-finite rate");
  const Var inputs[] = {y, mu, sigma};
  return t->record("gaussian_bits", Tensor3(1, 1, 1, bits), inputs,
                   [t, y, mu, sigma](const Tensor3& g) {
    const Tensor3& yv = y.value();
    const Tensor3& mv = mu.value();
    const Tensor3& sv = sigma.value();
    Tensor3 gr(yv.channels(), yv.height(), yv.width());
    Tensor3 gs = gr;
    const double scale = -g[0] / std::log(2.0);
    for (std::size_t i = 0; i < yv.size(); ++i) {
      const double r = yv[i] - mv[i];
      const double a = std::fabs(r);
      const double s = sv[i];
      const double u1 = (0.5 - a) / s;
      const double u2 = (-0.5 - a) / s;
      const double p1 = normal_pdf(u1);
      const double p2 = normal_pdf(u2);
      const double l = std::max(gaussian_likelihood(r, s), kLikelihoodFloor);
      const double dl_da = (p2 - p1) / s;
      const double dl_ds = (u2 * p2 - u1 * p1) / s;
      const double sgn = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      gr[i] = scale * sgn * dl_da / l;
      gs[i] = scale * dl_ds / l;
    }
    if (mu.requires_grad()) {
      Tensor3 gm = gr;
      for (double& v : gm.data()) v = -v;
      t->accumulate(mu, std::move(gm));
    }
    t->accumulate(sigma, std::move(gs));
    t->accumulate(y, std::move(gr));
  });
}

FactorizedPrior::FactorizedPrior(ParamStore& store, const std::string& name,
                                 int channels)
    : channels_(channels) {
  if (channels < 1) throw ArgumentError("prior needs at least one channel");
  const auto c = static_cast<std::uint32_t>(channels);
  mu_ = &store.add(name + ".mu", {c}, Tensor3(channels, 1, 1));
  log_sigma_ = &store.add(name + ".log_sigma", {c}, Tensor3(channels, 1, 1));
}

Var FactorizedPrior::mu(Tape& tape, int h, int w) const {
  return ad::expand(tape.param(*mu_), h, w);
}

Var FactorizedPrior::sigma(Tape& tape, int h, int w) const {
  Var s = ad::clamp(ad::exp(tape.param(*log_sigma_)), kSigmaMin, kSigmaMax);
  return ad::expand(s, h, w);
}

Tensor3 FactorizedPrior::mu_value(int h, int w) const {
  Tensor3 out(channels_, h, w);
  for (int c = 0; c < channels_; ++c) {
    std::fill(out.plane(c).begin(), out.plane(c).end(), mu_->value[c]);
  }
  return out;
}

Tensor3 FactorizedPrior::sigma_value(int h, int w) const {
  Tensor3 out(channels_, h, w);
  for (int c = 0; c < channels_; ++c) {
    const double s = std::clamp(std::exp(log_sigma_->value[c]), kSigmaMin,
                                kSigmaMax);
    std::fill(out.plane(c).begin(), out.plane(c).end(), s);
  }
  return out;
}

}  // namespace wecodec
