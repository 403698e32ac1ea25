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

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracles.h"
#include "wecodec/entropy.h"
#include "wecodec/errors.h"
#include "wecodec/nn.h"

namespace wecodec {
namespace {

PmfTable uniform_table(int buckets) {
  // support = (buckets - 2) / 2 plus escape; buckets must be even.
  PmfTable t;
  t.support = (buckets - 2) / 2;
  for (int i = 0; i <= buckets; ++i) {
    t.cdf.push_back(static_cast<std::uint32_t>(kTotalFreq / buckets * i));
  }
  return t;
}

double ideal_bits(std::span<const std::int32_t> s, const TableBank& tables) {
  // Recomputed here from the integer tables only.
  double bits = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const PmfTable& t = tables[i];
    const bool esc = s[i] < -t.support || s[i] > t.support;
    const int idx = esc ? 2 * t.support + 1 : s[i] + t.support;
    bits += -std::log2(static_cast<double>(t.cdf[idx + 1] - t.cdf[idx]) /
                       kTotalFreq);
    if (esc) bits += 16;
  }
  return bits;
}

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

}  // namespace

TEST_CASE("quantize") {
  Tensor3 y(1, 1, 3), mu(1, 1, 3);
  y[0] = 1.3;
  y[1] = 0.25;
  mu[1] = 0.25;
  y[2] = -2.5;
  Quantized q = quantize(y, mu);
  CHECK(q.symbols[0] == 1);
  CHECK(q.dequant[0] == 1.0);
  CHECK(q.symbols[1] == 0);
  CHECK(q.dequant[1] == 0.25);
  CHECK(q.symbols[2] == -3);

  SeededRng rng(1);
  Tensor3 big = seeded_uniform(rng, 4, 32, 32, -50.0, 50.0);
  Tensor3 m = seeded_uniform(rng, 4, 32, 32, -3.0, 3.0);
  Quantized qb = quantize(big, m);
  CHECK(big.max_abs_diff(qb.dequant) <= 0.5);
  CHECK(dequantize(qb.symbols, m) == qb.dequant);

  Tensor3 zero(1, 1000, 1000);
  Tensor3 noisy = quantize_noise(zero, rng);
  double worst = 0.0;
  for (double v : noisy.data()) worst = std::max(worst, std::fabs(v));
  CHECK(worst < 0.5);
  CHECK(worst > 0.49);

  CHECK_THROWS_AS(quantize(y, Tensor3(1, 1, 2)), ShapeError);
}

TEST_CASE("pmf tables") {
  const double p0 = oracle::discretized_gaussian(0, 1.0);
  CHECK(p0 == doctest::Approx(0.38292).epsilon(1e-4));
  const PmfTable t1 = pmf_table(1.0);
  const double target = std::round(p0 * kTotalFreq);
  CHECK(std::fabs(t1.freq(t1.index_of(0)) - target) <= 1.0);

  const PmfTable tmin = pmf_table(kSigmaMin);
  CHECK(static_cast<double>(tmin.freq(tmin.index_of(0))) / kTotalFreq > 0.97);
  CHECK(oracle::discretized_gaussian(0, kSigmaMin) > 0.97);

  SeededRng rng(2);
  std::vector<double> sigmas{0.0, 1e-9, kSigmaMin, 0.5, 1.0, 255.9, 256.0,
                             1e6, std::nan(""), -3.0,
                             std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 300; ++i) {
    sigmas.push_back(std::exp(rng.uniform(std::log(0.05), std::log(400.0))));
  }
  for (double s : sigmas) {
    const PmfTable t = pmf_table(s);
    REQUIRE(t.cdf.size() == static_cast<std::size_t>(t.bucket_count() + 1));
    CHECK(t.cdf.front() == 0);
    CHECK(t.cdf.back() == kTotalFreq);
    for (int i = 0; i < t.bucket_count(); ++i) CHECK(t.freq(i) >= 1);
    CHECK(t.support >= 1);
    CHECK(t.support <= kAlphabetHalf);
    // Quantized pmf tracks the continuous one.
    const double sc = clamp_sigma(s);
    const double pz = oracle::discretized_gaussian(0, sc);
    CHECK(std::fabs(t.freq(t.index_of(0)) - pz * kTotalFreq) <=
          2.0 + t.bucket_count());
  }
  CHECK(pmf_table(0.5).cdf == pmf_table(0.5).cdf);
}

TEST_CASE("rate estimate") {
  PmfTable half = uniform_table(2);
  CHECK(symbol_bits(half, 0) == doctest::Approx(1.0));
  PmfTable certain;
  certain.support = 0;
  certain.cdf = {0, kTotalFreq, kTotalFreq};
  CHECK(symbol_bits(certain, 0) == 0.0);
  CHECK(symbol_bits(uniform_table(4), 7) == doctest::Approx(2.0 + 16.0));

  // Discretised N(0, 1): entropy by direct summation.
  double entropy = 0.0;
  for (int k = -40; k <= 40; ++k) {
    const double p = oracle::discretized_gaussian(k, 1.0);
    if (p > 0) entropy -= p * std::log2(p);
  }
  CHECK(entropy == doctest::Approx(2.1).epsilon(0.02));
  SeededRng rng(3);
  const int n = 100000;
  std::vector<std::int32_t> sym(n);
  for (int& s : sym) s = static_cast<int>(std::llround(rng.normal()));
  std::vector<double> sig(n, 1.0);
  const double mean = estimate_rate(sym, TableBank(sig)) / n;
  CHECK(std::fabs(mean - entropy) < 0.05);
  CHECK(estimate_rate(sym, TableBank(sig)) >= 0.0);
}

TEST_CASE("range coder basics") {
  TableBank none;
  auto empty = range_encode({}, none);
  CHECK(empty.size() <= 16);
  CHECK(range_decode(empty, none, 0).empty());

  RangeEncoder enc;
  SeededRng rng(4);
  std::vector<std::uint32_t> v(1000);
  for (auto& x : v) {
    x = static_cast<std::uint32_t>(rng.below(4));
    enc.encode(x * 16384, 16384);
  }
  auto bytes = enc.finish();
  CHECK(bytes.size() * 8 >= 2000);
  CHECK(bytes.size() * 8 <= 2000 + 128);
  RangeDecoder dec(bytes);
  for (auto x : v) {
    const std::uint32_t got = dec.peek() / 16384;
    CHECK(got == x);
    dec.consume(got * 16384, 16384);
  }

  // Explicit tables including the escape path.
  PmfTable t = uniform_table(4);
  RangeEncoder e2;
  const std::int32_t syms[] = {-1, 0, 1, 9, -30000, 32767, 0};
  for (auto s : syms) e2.encode_symbol(t, s);
  auto b2 = e2.finish();
  RangeDecoder d2(b2);
  for (auto s : syms) CHECK(d2.decode_symbol(t) == s);
}

TEST_CASE("range coder round trip under random gaussian tables") {
  SeededRng rng(5);
  const int n = 1000000;
  std::vector<double> sig(n);
  std::vector<std::int32_t> sym(n);
  for (int i = 0; i < n; ++i) {
    sig[i] = std::exp(rng.uniform(std::log(0.08), std::log(24.0)));
    sym[i] = static_cast<std::int32_t>(std::llround(rng.normal() * sig[i] +
                                                    rng.uniform(-0.5, 0.5)));
    if (i % 50000 == 7) sym[i] = 5000;  // forced escape
  }
  TableBank tables(sig);
  const auto bytes = range_encode(sym, tables);
  const double ideal = ideal_bits(sym, tables);
  CHECK(ideal == doctest::Approx(estimate_rate(sym, tables)).epsilon(1e-12));
  const double coded = 8.0 * bytes.size();
  CHECK(coded >= ideal);
  CHECK(coded <= 1.01 * ideal + 128);
  CHECK(range_decode(bytes, tables, n) == sym);

  // Truncation.
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
  CHECK_THROWS_AS(range_decode(cut, tables, n), DecodeError);
  CHECK_THROWS_AS(range_decode(std::vector<std::uint8_t>{0, 1}, TableBank(), 0),
                  DecodeError);

  // Wrong tables decode to something else.
  std::vector<double> other(sig);
  for (double& s : other) s *= 3.0;
  const int m = 20000;
  std::vector<std::int32_t> head(sym.begin(), sym.begin() + m);
  std::vector<double> sig_head(sig.begin(), sig.begin() + m);
  std::vector<double> other_head(other.begin(), other.begin() + m);
  const auto hb = range_encode(head, TableBank(sig_head));
  std::vector<std::int32_t> garbage;
  try {
    garbage = range_decode(hb, TableBank(other_head), m);
  } catch (const DecodeError&) {
  }
  CHECK(garbage != head);
}

TEST_CASE("conformance vectors") {
  std::ifstream f(std::string(WECODEC_TESTDATA_DIR) +
                  "/range_coder_vectors.json");
  REQUIRE(f.good());
  const auto root = nlohmann::json::parse(f);
  CHECK(root["total_freq"].get<std::uint32_t>() == kTotalFreq);
  int cases = 0;
  for (const auto& c : root["cases"]) {
    INFO("case " << c["name"].get<std::string>());
    const auto sig = c["sigmas"].get<std::vector<double>>();
    const auto sym = c["symbols"].get<std::vector<std::int32_t>>();
    const auto expected = from_hex(c["bytes"].get<std::string>());
    // Encode with the stored integer tables: no floating point involved.
    std::vector<PmfTable> stored;
    for (double s : sig) {
      char key[64];
      std::snprintf(key, sizeof(key), "%.17g", s);
      PmfTable t;
      t.cdf = c["tables"][key].get<std::vector<std::uint32_t>>();
      t.support = static_cast<int>(t.cdf.size() - 3) / 2;
      // Tables derived on this platform must agree with the stored ones.
      CHECK(pmf_table(s).cdf == t.cdf);
      stored.push_back(std::move(t));
    }
    RangeEncoder enc;
    for (std::size_t i = 0; i < sym.size(); ++i) {
      enc.encode_symbol(stored[i], sym[i]);
    }
    CHECK(enc.finish() == expected);
    RangeDecoder dec(expected);
    for (std::size_t i = 0; i < sym.size(); ++i) {
      CHECK(dec.decode_symbol(stored[i]) == sym[i]);
    }
    CHECK(range_encode(sym, TableBank(sig)) == expected);
    ++cases;
  }
  CHECK(cases == 5);
}

TEST_CASE("chunk framing") {
  ByteWriter w;
  const std::uint8_t a[] = {1, 2, 3};
  append_chunk(w, a);
  append_chunk(w, {});
  auto bytes = w.take();
  CHECK(bytes.size() == 4 + 3 + 4);
  CHECK(bytes[0] == 3);
  ByteReader r(bytes);
  auto c1 = read_chunk(r);
  CHECK(std::vector<std::uint8_t>(c1.begin(), c1.end()) ==
        std::vector<std::uint8_t>{1, 2, 3});
  CHECK(read_chunk(r).empty());
  bytes.resize(5);
  ByteReader r2(bytes);
  CHECK_THROWS_AS(read_chunk(r2), DecodeError);
}

TEST_CASE("differentiable rate") {
  SeededRng rng(6);
  Tensor3 y = seeded_uniform(rng, 2, 4, 4, -3.0, 3.0);
  Tensor3 mu = seeded_uniform(rng, 2, 4, 4, -1.0, 1.0);
  Tensor3 sigma = seeded_uniform(rng, 2, 4, 4, 0.3, 2.5);
  Tape tape;
  Var b = gaussian_bits(tape.constant(y), tape.constant(mu),
                        tape.constant(sigma));
  double expected = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - mu[i];
    expected -= std::log2(oracle::phi((r + 0.5) / sigma[i]) -
                          oracle::phi((r - 0.5) / sigma[i]));
  }
  CHECK(b.value()[0] == doctest::Approx(expected).epsilon(1e-10));

  std::vector<Tensor3> in{y, mu, sigma};
  auto r = grad_check(
      [](Tape&, std::span<const Var> v) {
        return gaussian_bits(v[0], v[1], v[2]);
      },
      in, nullptr);
  CHECK(r.max_rel_error < 1e-5);

  // Far outliers stay finite.
  Tensor3 far(1, 1, 1, 1e6);
  Tape t2;
  Var bf = gaussian_bits(t2.input(far), t2.constant(Tensor3(1, 1, 1)),
                         t2.constant(Tensor3(1, 1, 1, kSigmaMin)));
  CHECK(bf.value()[0] == doctest::Approx(-std::log2(kLikelihoodFloor)));
  CHECK(std::isfinite(bf.value()[0]));

  // Continuous and table rates agree on quantized data.
  const int n = 20000;
  Tensor3 ys(1, 1, n), ms(1, 1, n), ss(1, 1, n);
  std::vector<double> sv(n);
  for (int i = 0; i < n; ++i) {
    ss[i] = sv[i] = std::exp(rng.uniform(std::log(0.2), std::log(20.0)));
    ys[i] = std::round(rng.normal() * ss[i]);
  }
  Tape t3;
  const double cont = gaussian_bits(t3.constant(ys), t3.constant(ms),
                                    t3.constant(ss))
                          .value()[0];
  Quantized q = quantize(ys, ms);
  const double table = estimate_rate(q.symbols, TableBank(sv));
  CHECK(std::fabs(table - cont) / cont < 0.01);
}

TEST_CASE("factorized prior") {
  ParamStore store;
  FactorizedPrior prior(store, "prior.z", 3);
  store.at("prior.z.log_sigma").value[1] = -10.0;
  store.at("prior.z.mu").value[2] = 0.75;
  Tensor3 s = prior.sigma_value(2, 2);
  CHECK(s(0, 0, 0) == doctest::Approx(1.0));
  CHECK(s(1, 1, 1) == kSigmaMin);
  CHECK(prior.mu_value(2, 2)(2, 1, 0) == 0.75);
  Tape tape;
  CHECK(prior.sigma(tape, 2, 2).value() == s);
  CHECK(prior.mu(tape, 2, 2).value() == prior.mu_value(2, 2));
  CHECK(store.total_count() == 6);
}

}  // namespace wecodec
