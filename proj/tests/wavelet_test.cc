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

#include "wecodec/wavelet.h"

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.h"
#include "wecodec/errors.h"

namespace wecodec {
namespace {

constexpr WaveletKind kAllKinds[] = {WaveletKind::kHaar, WaveletKind::kLeGall53,
                                     WaveletKind::kCdf97};

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST_CASE("haar two-tap analytic case") {
  const std::vector<double> x{3.0, 1.0};
  LiftPair p = lift_forward(x, WaveletKind::kHaar);
  CHECK(p.low[0] == doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-15));
  CHECK(p.high[0] == doctest::Approx(std::numbers::sqrt2).epsilon(1e-15));
}

TEST_CASE("constant signal has vanishing high band") {
  const std::vector<double> x{5, 5, 5, 5};
  for (WaveletKind k : kAllKinds) {
    LiftPair p = lift_forward(x, k);
    for (double h : p.high) {
      if (k == WaveletKind::kCdf97) {
        // The rounded ISO constants cancel to within a few ulps only.
        CHECK(std::abs(h) < 1e-12);
      } else {
        CHECK(h == 0.0);
      }
    }
  }
}

TEST_CASE("reversible 5/3 matches the ISO reference") {
  const std::vector<double> x{2, 4, 6, 8};
  std::vector<double> lo;
  std::vector<double> hi;
  oracle::legall53_reversible_reference(x, lo, hi);
  // Frozen from the reference oracle.
  CHECK(lo == std::vector<double>{2, 7});
  CHECK(hi == std::vector<double>{0, 2});
  LiftPair p = lift_forward(x, WaveletKind::kLeGall53);
  CHECK(p.low == lo);
  CHECK(p.high == hi);

  SeededRng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 * (1 + static_cast<int>(rng.below(20)));
    std::vector<double> s(n);
    for (double& v : s) v = std::floor(rng.uniform(-300, 300));
    oracle::legall53_reversible_reference(s, lo, hi);
    LiftPair q = lift_forward(s, WaveletKind::kLeGall53);
    CHECK(q.low == lo);
    CHECK(q.high == hi);
    CHECK(lift_inverse(q.low, q.high, WaveletKind::kLeGall53) == s);
  }
}

TEST_CASE("lifting agrees with the filter-bank oracle") {
  SeededRng rng(97);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 * (4 + static_cast<int>(rng.below(30)));
    std::vector<double> s(n);
    for (double& v : s) v = rng.uniform(-10, 10);
    std::vector<double> lo;
    std::vector<double> hi;
    oracle::filter_bank_analysis(s, oracle::cdf97_bank(), lo, hi);
    LiftPair p97 = lift_forward(s, WaveletKind::kCdf97);
    CHECK(max_abs(p97.low, lo) < 1e-9);
    CHECK(max_abs(p97.high, hi) < 1e-9);
    oracle::filter_bank_analysis(s, oracle::legall53_bank(), lo, hi);
    LiftPair p53 = lift_forward(s, WaveletKind::kLeGall53, LiftingMode::kLinear);
    CHECK(max_abs(p53.low, lo) < 1e-12);
    CHECK(max_abs(p53.high, hi) < 1e-12);
  }
}

TEST_CASE("odd lengths are rejected") {
  const std::vector<double> x{1, 2, 3};
  CHECK_THROWS_AS(lift_forward(x, WaveletKind::kHaar), ShapeError);
  CHECK_THROWS_AS(lift_forward(std::vector<double>{}, WaveletKind::kHaar),
                  ShapeError);
}

TEST_CASE("haar 2D on a constant plane") {
  Tensor3 ones(1, 4, 4, 1.0);
  SpatialPyramid p = dwt2d_multi(ones, WaveletKind::kHaar, 1);
  for (double v : p.ll.data()) CHECK(v == doctest::Approx(2.0).epsilon(1e-15));
  for (const auto& band : p.details[0]) {
    for (double v : band.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("2D multi-level perfect reconstruction") {
  SeededRng rng(8);
  for (WaveletKind k : kAllKinds) {
    Tensor3 x = seeded_uniform(rng, 2, 8, 8, -1, 1);
    SpatialPyramid p = dwt2d_multi(x, k, 2);
    CHECK(p.element_count() == x.size());
    CHECK(p.ll.height() == 2);
    CHECK(p.details[0][0].height() == 4);
    CHECK(p.details[1][2].width() == 2);
    CHECK(idwt2d_multi(p, k).max_abs_diff(x) <= 1e-9);
  }
  CHECK_THROWS_AS(dwt2d_multi(Tensor3(1, 6, 8), WaveletKind::kHaar, 2),
                  ShapeError);
  CHECK_THROWS_AS(dwt2d_multi(Tensor3(1, 8, 8), WaveletKind::kHaar, 0),
                  ShapeError);
}

TEST_CASE("9/7 step edge against the 2D convolution oracle") {
  // Horizontal edge: rows change value, so the energy lands in the band that
  // is high-pass vertically (HL).
  const int n = 16;
  Tensor3 edge(1, n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) edge(0, y, x) = y < 7 ? 0.0 : 1.0;
  }
  SpatialPyramid p = dwt2d_multi(edge, WaveletKind::kCdf97, 1);
  const double hl = p.band(SpatialBand::kHL, 1).sum_squares();
  const double lh = p.band(SpatialBand::kLH, 1).sum_squares();
  CHECK(hl > 0.1);
  CHECK(hl > 1e6 * lh);

  // Separable oracle: filter every column, then every row.
  Tensor3 ref(1, n, n);
  std::vector<double> lo;
  std::vector<double> hi;
  Tensor3 tmp(1, n, n);
  for (int x = 0; x < n; ++x) {
    std::vector<double> col(n);
    for (int y = 0; y < n; ++y) col[y] = edge(0, y, x);
    oracle::filter_bank_analysis(col, oracle::cdf97_bank(), lo, hi);
    for (int y = 0; y < n / 2; ++y) {
      tmp(0, y, x) = lo[y];
      tmp(0, n / 2 + y, x) = hi[y];
    }
  }
  for (int y = 0; y < n; ++y) {
    std::vector<double> row(n);
    for (int x = 0; x < n; ++x) row[x] = tmp(0, y, x);
    oracle::filter_bank_analysis(row, oracle::cdf97_bank(), lo, hi);
    for (int x = 0; x < n / 2; ++x) {
      ref(0, y, x) = lo[x];
      ref(0, y, n / 2 + x) = hi[x];
    }
  }
  Tensor3 packed = edge;
  dwt2d_packed(packed, WaveletKind::kCdf97, 1, Pass::kForward);
  CHECK(packed.max_abs_diff(ref) < 1e-9);
}

TEST_CASE("channel DWT") {
  Tensor3 t(2, 3, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) t(0, y, x) = t(1, y, x) = y - 2.0 * x;
  }
  ChannelGroups g = dwt_channel(t, WaveletKind::kHaar);
  for (double v : g.high.data()) CHECK(v == 0.0);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      CHECK(g.low(0, y, x) ==
            doctest::Approx(std::numbers::sqrt2 * t(0, y, x)).epsilon(1e-15));
    }
  }
  SeededRng rng(3);
  Tensor3 r = seeded_uniform(rng, 8, 5, 5, -2, 2);
  for (WaveletKind k : kAllKinds) {
    CHECK(idwt_channel(dwt_channel(r, k), k).max_abs_diff(r) <= 1e-9);
  }
  CHECK_THROWS_AS(dwt_channel(Tensor3(3, 2, 2), WaveletKind::kHaar), ShapeError);
}

TEST_CASE("3D DWT subbands") {
  Tensor3 latent(320, 8, 12);
  SubbandTensor s = dwt3d(latent, WaveletKind::kHaar, WaveletKind::kCdf97, 1);
  const auto labels = s.labels();
  REQUIRE(labels.size() == 8);
  CHECK(labels[0] == "LLL");
  CHECK(labels[7] == "HHH");
  for (const auto& l : labels) {
    CHECK(s[l].channels() == 160);
    CHECK(s[l].height() == 4);
    CHECK(s[l].width() == 6);
  }

  SeededRng rng(4);
  Tensor3 x = seeded_uniform(rng, 4, 8, 8, -1, 1);
  for (WaveletKind k : kAllKinds) {
    SubbandTensor d = dwt3d(x, WaveletKind::kHaar, k, 1);
    CHECK(d.element_count() == x.size());
    CHECK(idwt3d(d, WaveletKind::kHaar, k).max_abs_diff(x) <= 1e-9);
  }

  Tensor3 c(4, 8, 8, 3.0);
  SubbandTensor cs =
      dwt3d(c, WaveletKind::kLeGall53, WaveletKind::kLeGall53, 1);
  for (const auto& l : cs.labels()) {
    const double e = cs[l].sum_squares();
    if (l == "LLL") {
      CHECK(e > 0);
    } else {
      CHECK(e == 0.0);
    }
  }

  SubbandTensor two = dwt3d(x, WaveletKind::kHaar, WaveletKind::kCdf97, 2);
  CHECK(two.labels().size() == 14);
  CHECK(two["H.LL2"].height() == 2);
  CHECK(two["L.HH1"].height() == 4);
  CHECK_THROWS_AS(two["LLL"], RangeError);
  CHECK_THROWS_AS(dwt3d(Tensor3(3, 8, 8), WaveletKind::kHaar,
                        WaveletKind::kHaar, 1),
                  ShapeError);
}

TEST_CASE("haar preserves energy") {
  SeededRng rng(11);
  Tensor3 x = seeded_uniform(rng, 6, 16, 16, -3, 3);
  Tensor3 packed = x;
  dwt3d_packed(packed, WaveletKind::kHaar, WaveletKind::kHaar, 2,
               Pass::kForward);
  CHECK(std::abs(packed.sum_squares() - x.sum_squares()) <=
        1e-9 * x.sum_squares());
}

TEST_CASE("linearity for haar and 9/7") {
  SeededRng rng(12);
  Tensor3 a = seeded_uniform(rng, 4, 8, 8, -1, 1);
  Tensor3 b = seeded_uniform(rng, 4, 8, 8, -1, 1);
  for (WaveletKind k : {WaveletKind::kHaar, WaveletKind::kCdf97}) {
    Tensor3 mix(4, 8, 8);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.5 * a[i] - 0.75 * b[i];
    Tensor3 fa = a;
    Tensor3 fb = b;
    dwt3d_packed(fa, WaveletKind::kHaar, k, 2, Pass::kForward);
    dwt3d_packed(fb, WaveletKind::kHaar, k, 2, Pass::kForward);
    dwt3d_packed(mix, WaveletKind::kHaar, k, 2, Pass::kForward);
    for (std::size_t i = 0; i < mix.size(); ++i) {
      CHECK(std::abs(mix[i] - (2.5 * fa[i] - 0.75 * fb[i])) < 1e-9);
    }
  }
}

TEST_CASE("adjoint passes are transposes") {
  // <F x, g> must equal <x, F^T g> for the forward and inverse maps.
  SeededRng rng(21);
  for (WaveletKind k : kAllKinds) {
    for (int levels : {1, 2}) {
      Tensor3 x = seeded_uniform(rng, 4, 8, 16, -1, 1);
      Tensor3 g = seeded_uniform(rng, 4, 8, 16, -1, 1);
      for (auto [p, pt] : {std::pair{Pass::kForward, Pass::kForwardAdjoint},
                           std::pair{Pass::kInverse, Pass::kInverseAdjoint}}) {
        Tensor3 fx = x;
        dwt3d_packed(fx, WaveletKind::kHaar, k, levels, p, LiftingMode::kLinear);
        Tensor3 ftg = g;
        dwt3d_packed(ftg, WaveletKind::kHaar, k, levels, pt,
                     LiftingMode::kLinear);
        CHECK(std::abs(dot(fx.data(), g.data()) - dot(x.data(), ftg.data())) <
              1e-10);
      }
    }
  }
  Tensor3 t(2, 4, 4);
  CHECK_THROWS_AS(dwt2d_packed(t, WaveletKind::kLeGall53, 1,
                               Pass::kForwardAdjoint, LiftingMode::kReversible),
                  ArgumentError);
}

TEST_CASE("reversible 5/3 is exact on integers in every layout") {
  SeededRng rng(22);
  Tensor3 x(8, 16, 16);
  for (double& v : x.data()) v = std::floor(rng.uniform(-255, 256));
  Tensor3 y = x;
  dwt3d_packed(y, WaveletKind::kLeGall53, WaveletKind::kLeGall53, 2,
               Pass::kForward);
  for (double v : y.data()) CHECK(v == std::floor(v));
  dwt3d_packed(y, WaveletKind::kLeGall53, WaveletKind::kLeGall53, 2,
               Pass::kInverse);
  CHECK(y == x);
}

TEST_CASE("wavelet names") {
  CHECK(parse_wavelet("9/7") == WaveletKind::kCdf97);
  CHECK(parse_wavelet("53") == WaveletKind::kLeGall53);
  CHECK(wavelet_name(WaveletKind::kHaar) == "haar");
  CHECK_THROWS_AS(parse_wavelet("db4"), ArgumentError);
}

TEST_CASE("band statistics") {
  Tensor3 band(1, 2, 2);
  band(0, 0, 0) = 0.2;
  band(0, 0, 1) = -0.4;
  band(0, 1, 0) = 1.1;
  band(0, 1, 1) = 0.9;
  const BandStats st = band_stats("X", band);
  CHECK(st.count == 4);
  CHECK(st.energy == doctest::Approx(0.04 + 0.16 + 1.21 + 0.81).epsilon(1e-12));
  // Two values round to 0 and two to 1.
  CHECK(st.entropy_bits == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(band_stats("C", Tensor3(2, 3, 3, 7.0)).entropy_bits == 0.0);

  SeededRng rng(5);
  const Tensor3 x = seeded_uniform(rng, 4, 16, 16, -20, 20);
  const SubbandTensor s =
      dwt3d(x, WaveletKind::kHaar, WaveletKind::kCdf97, 2);
  const std::vector<BandStats> all = subband_stats(s);
  REQUIRE(all.size() == 14);
  CHECK(all.front().label == "L.LL2");
  double energy = 0.0;
  std::size_t count = 0;
  for (const BandStats& b : all) {
    energy += b.energy;
    count += b.count;
  }
  CHECK(count == x.size());
  CHECK(energy > 0.0);

  const std::vector<BandStats> flat =
      pyramid_stats(dwt2d_multi(x, WaveletKind::kLeGall53, 2));
  REQUIRE(flat.size() == 7);
  CHECK(flat[0].label == "LL2");
  CHECK(flat[1].label == "LH2");
  CHECK(flat[6].label == "HH1");
}

}  // namespace
}  // namespace wecodec
