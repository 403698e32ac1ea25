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

#include "wecodec/metrics.h"

#include <cmath>
#include <vector>

#include "wecodec/errors.h"

namespace wecodec {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kCsFloor = 1e-6;

std::array<double, kMsSsimWindow> gaussian_window() {
  std::array<double, kMsSsimWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kMsSsimWindow; ++i) {
    const double d = i - kMsSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kMsSsimSigma * kMsSsimSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid filtering of one plane.
std::vector<double> blur(const std::vector<double>& p, int h, int w) {
  static const auto g = gaussian_window();
  const int oh = h - kMsSsimWindow + 1;
  const int ow = w - kMsSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kMsSsimWindow; ++k) s += g[k] * p[y * w + x + k];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kMsSsimWindow; ++k) s += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

struct ScaleStats {
  double ssim;
  double cs;
};

ScaleStats ssim_stats(const std::vector<double>& a, const std::vector<double>& b,
                      int h, int w) {
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = blur(a, h, w);
  const auto mu_b = blur(b, h, w);
  const auto e_aa = blur(aa, h, w);
  const auto e_bb = blur(bb, h, w);
  const auto e_ab = blur(ab, h, w);
  double ssim = 0.0;
  double cs = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double c = (2.0 * cov + kC2) / (va + vb + kC2);
    const double l = (2.0 * mu_a[i] * mu_b[i] + kC1) /
                     (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1);
    ssim += l * c;
    cs += c;
  }
  const double n = static_cast<double>(mu_a.size());
  return {ssim / n, cs / n};
}

std::vector<double> pool2(const std::vector<double>& p, int h, int w) {
  const int oh = h / 2;
  const int ow = w / 2;
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double* r0 = &p[(2 * y) * w + 2 * x];
      const double* r1 = r0 + w;
      out[y * ow + x] = 0.25 * ((r0[0] + r0[1]) + (r1[0] + r1[1]));
    }
  }
  return out;
}

void check_pair(const Tensor3& a, const Tensor3& b) {
  if (!a.same_shape(b) || a.empty()) {
    throw ShapeError("metric: images differ in shape");
  }
}

}  // namespace

double mse(const Tensor3& a, const Tensor3& b) {
  check_pair(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Tensor3& a, const Tensor3& b) {
  const double m = mse(a, b);
  if (m == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(1.0 / m);
}

double ms_ssim(const Tensor3& a, const Tensor3& b) {
  check_pair(a, b);
  if (std::min(a.height(), a.width()) < kMsSsimMinSide) {
    throw ArgumentError("ms_ssim: images must be at least 176 pixels per side");
  }
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> pa(a.plane(c).begin(), a.plane(c).end());
    std::vector<double> pb(b.plane(c).begin(), b.plane(c).end());
    int h = a.height();
    int w = a.width();
    double value = 1.0;
    for (int s = 0; s < kMsSsimScales; ++s) {
      const ScaleStats st = ssim_stats(pa, pb, h, w);
      const bool last = s + 1 == kMsSsimScales;
      const double term = std::max(last ? st.ssim : st.cs, 0.0);
      value *= std::pow(term, kMsSsimWeights[s]);
      if (!last) {
        pa = pool2(pa, h, w);
        pb = pool2(pb, h, w);
        h /= 2;
        w /= 2;
      }
    }
    total += value;
  }
  return total / a.channels();
}

double ms_ssim_db(double value) {
  if (value >= 1.0) return kInfinitePsnr;
  return -10.0 * std::log10(1.0 - value);
}

namespace {

Var blur_var(Var x) {
  static const auto g = gaussian_window();
  const int c = x.value().channels();
  constexpr int k = kMsSsimWindow;
  Tensor3 weight(c, c, k * k);
  for (int i = 0; i < c; ++i) {
    for (int y = 0; y < k; ++y) {
      for (int z = 0; z < k; ++z) weight(i, i, y * k + z) = g[y] * g[z];
    }
  }
  Var full = ad::conv2d(x, x.tape()->constant(std::move(weight)), Var(), k, 1,
                        false);
  const int h = x.value().height();
  const int w = x.value().width();
  return ad::crop(full, 0, c, BandRegion{k / 2, k / 2, h - k + 1, w - k + 1});
}

}  // namespace

Var ms_ssim(Var a, Var b) {
  check_pair(a.value(), b.value());
  const Tensor3& av = a.value();
  if (std::min(av.height(), av.width()) < kMsSsimMinSide) {
    throw ArgumentError("ms_ssim: images must be at least 176 pixels per side");
  }
  Var value;
  for (int s = 0; s < kMsSsimScales; ++s) {
    Var mu_a = blur_var(a);
    Var mu_b = blur_var(b);
    Var mu_aa = ad::mul(mu_a, mu_a);
    Var mu_bb = ad::mul(mu_b, mu_b);
    Var mu_ab = ad::mul(mu_a, mu_b);
    Var var_a = ad::sub(blur_var(ad::mul(a, a)), mu_aa);
    Var var_b = ad::sub(blur_var(ad::mul(b, b)), mu_bb);
    Var cov = ad::sub(blur_var(ad::mul(a, b)), mu_ab);
    Var cs_map = ad::div(ad::add_scalar(ad::scale(cov, 2.0), kC2),
                         ad::add_scalar(ad::add(var_a, var_b), kC2));
    const bool last = s + 1 == kMsSsimScales;
    Var map = cs_map;
    if (last) {
      Var lum = ad::div(ad::add_scalar(ad::scale(mu_ab, 2.0), kC1),
                        ad::add_scalar(ad::add(mu_aa, mu_bb), kC1));
      map = ad::mul(lum, cs_map);
    }
    Var term = ad::pow_scalar(
        ad::clamp(ad::global_avg_pool(map), kCsFloor, 2.0),
        kMsSsimWeights[s]);
    value = value.valid() ? ad::mul(value, term) : term;
    if (!last) {
      a = ad::avg_pool2(a);
      b = ad::avg_pool2(b);
    }
  }
  return ad::mean(value);
}

}  // namespace wecodec
