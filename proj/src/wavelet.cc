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

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "wecodec/errors.h"

namespace wecodec {
namespace {

// One lifting step: x[i] += left * x[i - 1] + right * x[i + 1] for every i of
// the given parity, with whole-sample symmetric extension at both ends.
struct LiftStep {
  int parity;
  double left;
  double right;
};

struct Scheme {
  std::vector<LiftStep> steps;
  double scale_even;
  double scale_odd;
};

// ISO/IEC 15444-1 irreversible 9/7 lifting constants.
constexpr double kAlpha = -1.586134342059924;
constexpr double kBeta = -0.052980118572961;
constexpr double kGamma = 0.882911075530934;
constexpr double kDelta = 0.443506852043971;
constexpr double kK = 1.230174104914001;

const Scheme& scheme_for(WaveletKind kind) {
  static const Scheme haar{{{1, -1.0, 0.0}, {0, 0.0, 0.5}},
                           std::numbers::sqrt2,
                           -1.0 / std::numbers::sqrt2};
  static const Scheme legall{{{1, -0.5, -0.5}, {0, 0.25, 0.25}}, 1.0, 1.0};
  static const Scheme cdf97{{{1, kAlpha, kAlpha},
                             {0, kBeta, kBeta},
                             {1, kGamma, kGamma},
                             {0, kDelta, kDelta}},
                            1.0 / kK,
                            kK};
  switch (kind) {
    case WaveletKind::kHaar:
      return haar;
    case WaveletKind::kLeGall53:
      return legall;
    case WaveletKind::kCdf97:
      return cdf97;
  }
  throw ArgumentError("unknown wavelet kind");
}

inline int reflect(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

void apply_step(double* x, int n, const LiftStep& s, double sign) {
  const double l = sign * s.left;
  const double r = sign * s.right;
  for (int i = s.parity; i < n; i += 2) {
    x[i] += l * x[reflect(i - 1, n)] + r * x[reflect(i + 1, n)];
  }
}

void apply_step_transposed(double* x, int n, const LiftStep& s, double sign) {
  const double l = sign * s.left;
  const double r = sign * s.right;
  for (int i = s.parity; i < n; i += 2) {
    x[reflect(i - 1, n)] += l * x[i];
    x[reflect(i + 1, n)] += r * x[i];
  }
}

void scale(double* x, int n, double even, double odd) {
  for (int i = 0; i < n; i += 2) {
    x[i] *= even;
    x[i + 1] *= odd;
  }
}

// JPEG 2000 reversible 5/3 on an interleaved line.
void legall_reversible_forward(double* x, int n) {
  for (int i = 1; i < n; i += 2) {
    x[i] -= std::floor((x[i - 1] + x[reflect(i + 1, n)]) / 2.0);
  }
  for (int i = 0; i < n; i += 2) {
    x[i] += std::floor((x[reflect(i - 1, n)] + x[i + 1] + 2.0) / 4.0);
  }
}

void legall_reversible_inverse(double* x, int n) {
  for (int i = 0; i < n; i += 2) {
    x[i] -= std::floor((x[reflect(i - 1, n)] + x[i + 1] + 2.0) / 4.0);
  }
  for (int i = 1; i < n; i += 2) {
    x[i] += std::floor((x[i - 1] + x[reflect(i + 1, n)]) / 2.0);
  }
}

bool uses_rounding(WaveletKind kind, LiftingMode mode) {
  return kind == WaveletKind::kLeGall53 && mode == LiftingMode::kReversible;
}

// Transforms one line of n samples. `line` holds the spatial signal for
// kForward / kInverseAdjoint outputs and the packed [low | high] layout on
// the other side. `tmp` is scratch of the same length.
void transform_line(double* line, double* tmp, int n, WaveletKind kind,
                    Pass pass, LiftingMode mode) {
  const Scheme& sc = scheme_for(kind);
  const int half = n / 2;
  const bool rounding = uses_rounding(kind, mode);
  auto deinterleave = [&] {
    for (int i = 0; i < half; ++i) {
      tmp[i] = line[2 * i];
      tmp[half + i] = line[2 * i + 1];
    }
    std::copy(tmp, tmp + n, line);
  };
  auto interleave = [&] {
    for (int i = 0; i < half; ++i) {
      tmp[2 * i] = line[i];
      tmp[2 * i + 1] = line[half + i];
    }
    std::copy(tmp, tmp + n, line);
  };

  switch (pass) {
    case Pass::kForward:
      if (rounding) {
        legall_reversible_forward(line, n);
      } else {
        for (const auto& s : sc.steps) apply_step(line, n, s, 1.0);
        scale(line, n, sc.scale_even, sc.scale_odd);
      }
      deinterleave();
      break;
    case Pass::kInverse:
      interleave();
      if (rounding) {
        legall_reversible_inverse(line, n);
      } else {
        scale(line, n, 1.0 / sc.scale_even, 1.0 / sc.scale_odd);
        for (auto it = sc.steps.rbegin(); it != sc.steps.rend(); ++it) {
          apply_step(line, n, *it, -1.0);
        }
      }
      break;
    case Pass::kForwardAdjoint:
      if (rounding) throw ArgumentError("reversible 5/3 has no adjoint");
      interleave();
      scale(line, n, sc.scale_even, sc.scale_odd);
      for (auto it = sc.steps.rbegin(); it != sc.steps.rend(); ++it) {
        apply_step_transposed(line, n, *it, 1.0);
      }
      break;
    case Pass::kInverseAdjoint:
      if (rounding) throw ArgumentError("reversible 5/3 has no adjoint");
      for (const auto& s : sc.steps) apply_step_transposed(line, n, s, -1.0);
      scale(line, n, 1.0 / sc.scale_even, 1.0 / sc.scale_odd);
      deinterleave();
      break;
  }
}

void require_even(int n, const char* what) {
  if (n < 2 || n % 2 != 0) {
    throw ShapeError(std::string(what) + ": length must be even and >= 2, got " +
                     std::to_string(n));
  }
}

// Applies the 1D transform to every column (vertical) or row (horizontal) of
// the top-left hh x ww region of a plane with row stride `stride`.
void transform_columns(double* plane, int stride, int hh, int ww,
                       WaveletKind kind, Pass pass, LiftingMode mode,
                       std::vector<double>& line, std::vector<double>& tmp) {
  for (int x = 0; x < ww; ++x) {
    for (int y = 0; y < hh; ++y) line[y] = plane[y * stride + x];
    transform_line(line.data(), tmp.data(), hh, kind, pass, mode);
    for (int y = 0; y < hh; ++y) plane[y * stride + x] = line[y];
  }
}

void transform_rows(double* plane, int stride, int hh, int ww,
                    WaveletKind kind, Pass pass, LiftingMode mode,
                    std::vector<double>& tmp) {
  for (int y = 0; y < hh; ++y) {
    transform_line(plane + y * stride, tmp.data(), ww, kind, pass, mode);
  }
}

void check_plane_dims(int h, int w, int levels) {
  if (levels < 1) throw ShapeError("dwt2d: levels must be >= 1");
  const int unit = 1 << levels;
  if (h % unit != 0 || w % unit != 0) {
    throw ShapeError("dwt2d: " + std::to_string(h) + "x" + std::to_string(w) +
                     " not divisible by 2^" + std::to_string(levels));
  }
}

}  // namespace

std::string_view wavelet_name(WaveletKind kind) {
  switch (kind) {
    case WaveletKind::kHaar:
      return "haar";
    case WaveletKind::kLeGall53:
      return "5/3";
    case WaveletKind::kCdf97:
      return "9/7";
  }
  return "?";
}

WaveletKind parse_wavelet(std::string_view name) {
  if (name == "haar") return WaveletKind::kHaar;
  if (name == "5/3" || name == "53") return WaveletKind::kLeGall53;
  if (name == "9/7" || name == "97") return WaveletKind::kCdf97;
  throw ArgumentError("unknown wavelet '" + std::string(name) + "'");
}

LiftPair lift_forward(std::span<const double> signal, WaveletKind kind,
                      LiftingMode mode) {
  const int n = static_cast<int>(signal.size());
  require_even(n, "lift_forward");
  std::vector<double> line(signal.begin(), signal.end());
  std::vector<double> tmp(n);
  transform_line(line.data(), tmp.data(), n, kind, Pass::kForward, mode);
  return {std::vector<double>(line.begin(), line.begin() + n / 2),
          std::vector<double>(line.begin() + n / 2, line.end())};
}

std::vector<double> lift_inverse(std::span<const double> low,
                                 std::span<const double> high,
                                 WaveletKind kind, LiftingMode mode) {
  if (low.size() != high.size() || low.empty()) {
    throw ShapeError("lift_inverse: low/high must be equal and non-empty");
  }
  const int n = static_cast<int>(2 * low.size());
  std::vector<double> line(low.begin(), low.end());
  line.insert(line.end(), high.begin(), high.end());
  std::vector<double> tmp(n);
  transform_line(line.data(), tmp.data(), n, kind, Pass::kInverse, mode);
  return line;
}

void dwt2d_packed(std::span<double> plane, int h, int w, WaveletKind kind,
                  int levels, Pass pass, LiftingMode mode) {
  check_plane_dims(h, w, levels);
  if (plane.size() != static_cast<std::size_t>(h) * w) {
    throw ShapeError("dwt2d_packed: plane size mismatch");
  }
  std::vector<double> line(std::max(h, w));
  std::vector<double> tmp(std::max(h, w));
  double* p = plane.data();
  auto level_step = [&](int l, bool columns_first, Pass line_pass) {
    const int hh = h >> l;
    const int ww = w >> l;
    if (columns_first) {
      transform_columns(p, w, hh, ww, kind, line_pass, mode, line, tmp);
      transform_rows(p, w, hh, ww, kind, line_pass, mode, tmp);
    } else {
      transform_rows(p, w, hh, ww, kind, line_pass, mode, tmp);
      transform_columns(p, w, hh, ww, kind, line_pass, mode, line, tmp);
    }
  };
  // Forward applies columns then rows, finest level first. The other passes
  // are the inverse / transposed compositions of that sequence.
  switch (pass) {
    case Pass::kForward:
      for (int l = 0; l < levels; ++l) level_step(l, true, pass);
      break;
    case Pass::kInverseAdjoint:
      for (int l = 0; l < levels; ++l) level_step(l, true, pass);
      break;
    case Pass::kInverse:
    case Pass::kForwardAdjoint:
      for (int l = levels - 1; l >= 0; --l) level_step(l, false, pass);
      break;
  }
}

void dwt2d_packed(Tensor3& t, WaveletKind kind, int levels, Pass pass,
                  LiftingMode mode) {
  check_plane_dims(t.height(), t.width(), levels);
  parallel_for(t.channels(), [&](int c) {
    dwt2d_packed(t.plane(c), t.height(), t.width(), kind, levels, pass, mode);
  });
}

void dwt_channel_packed(Tensor3& t, WaveletKind kind, Pass pass,
                        LiftingMode mode) {
  const int c = t.channels();
  if (c % 2 != 0) {
    throw ShapeError("dwt_channel: channel count must be even, got " +
                     std::to_string(c));
  }
  const std::size_t ps = t.plane_size();
  auto data = t.data();
  const int rows = t.height();
  parallel_for(rows, [&](int y) {
    std::vector<double> line(c);
    std::vector<double> tmp(c);
    for (int x = 0; x < t.width(); ++x) {
      const std::size_t off = static_cast<std::size_t>(y) * t.width() + x;
      for (int k = 0; k < c; ++k) line[k] = data[k * ps + off];
      transform_line(line.data(), tmp.data(), c, kind, pass, mode);
      for (int k = 0; k < c; ++k) data[k * ps + off] = line[k];
    }
  });
}

std::string_view band_name(SpatialBand band) {
  switch (band) {
    case SpatialBand::kLL:
      return "LL";
    case SpatialBand::kLH:
      return "LH";
    case SpatialBand::kHL:
      return "HL";
    case SpatialBand::kHH:
      return "HH";
  }
  return "??";
}

BandRegion band_region(int h, int w, SpatialBand band, int level) {
  const int bh = h >> level;
  const int bw = w >> level;
  const bool vertical_high =
      band == SpatialBand::kHL || band == SpatialBand::kHH;
  const bool horizontal_high =
      band == SpatialBand::kLH || band == SpatialBand::kHH;
  return {vertical_high ? bh : 0, horizontal_high ? bw : 0, bh, bw};
}

namespace {

Tensor3 extract_region(const Tensor3& t, const BandRegion& r) {
  Tensor3 out(t.channels(), r.height, r.width);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) out(c, y, x) = t(c, r.y0 + y, r.x0 + x);
    }
  }
  return out;
}

void insert_region(Tensor3& t, const Tensor3& src, const BandRegion& r) {
  if (src.channels() != t.channels() || src.height() != r.height ||
      src.width() != r.width) {
    throw ShapeError("subband shape does not match its region");
  }
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) t(c, r.y0 + y, r.x0 + x) = src(c, y, x);
    }
  }
}

SpatialPyramid unpack_pyramid(const Tensor3& packed, int levels) {
  const int h = packed.height();
  const int w = packed.width();
  SpatialPyramid p;
  p.levels = levels;
  p.ll = extract_region(packed, band_region(h, w, SpatialBand::kLL, levels));
  p.details.resize(levels);
  for (int l = 1; l <= levels; ++l) {
    p.details[l - 1] = {
        extract_region(packed, band_region(h, w, SpatialBand::kLH, l)),
        extract_region(packed, band_region(h, w, SpatialBand::kHL, l)),
        extract_region(packed, band_region(h, w, SpatialBand::kHH, l))};
  }
  return p;
}

Tensor3 pack_pyramid(const SpatialPyramid& p) {
  if (p.levels < 1 || static_cast<int>(p.details.size()) != p.levels) {
    throw ShapeError("malformed spatial pyramid");
  }
  const int h = p.ll.height() << p.levels;
  const int w = p.ll.width() << p.levels;
  Tensor3 out(p.ll.channels(), h, w);
  insert_region(out, p.ll, band_region(h, w, SpatialBand::kLL, p.levels));
  for (int l = 1; l <= p.levels; ++l) {
    insert_region(out, p.details[l - 1][0],
                  band_region(h, w, SpatialBand::kLH, l));
    insert_region(out, p.details[l - 1][1],
                  band_region(h, w, SpatialBand::kHL, l));
    insert_region(out, p.details[l - 1][2],
                  band_region(h, w, SpatialBand::kHH, l));
  }
  return out;
}

}  // namespace

const Tensor3& SpatialPyramid::band(SpatialBand b, int level) const {
  if (b == SpatialBand::kLL) {
    if (level != levels) throw RangeError("LL band only exists at the deepest level");
    return ll;
  }
  if (level < 1 || level > levels) throw RangeError("pyramid level out of range");
  return details[level - 1][static_cast<int>(b) - 1];
}

std::size_t SpatialPyramid::element_count() const {
  std::size_t n = ll.size();
  for (const auto& d : details) {
    for (const auto& t : d) n += t.size();
  }
  return n;
}

SpatialPyramid dwt2d_multi(const Tensor3& planes, WaveletKind kind, int levels,
                           LiftingMode mode) {
  Tensor3 packed = planes;
  dwt2d_packed(packed, kind, levels, Pass::kForward, mode);
  return unpack_pyramid(packed, levels);
}

Tensor3 idwt2d_multi(const SpatialPyramid& pyramid, WaveletKind kind,
                     LiftingMode mode) {
  Tensor3 packed = pack_pyramid(pyramid);
  dwt2d_packed(packed, kind, pyramid.levels, Pass::kInverse, mode);
  return packed;
}

ChannelGroups dwt_channel(const Tensor3& t, WaveletKind kind,
                          LiftingMode mode) {
  Tensor3 packed = t;
  dwt_channel_packed(packed, kind, Pass::kForward, mode);
  const int half = t.channels() / 2;
  return {slice_channels(packed, 0, half),
          slice_channels(packed, half, t.channels())};
}

Tensor3 idwt_channel(const ChannelGroups& groups, WaveletKind kind,
                     LiftingMode mode) {
  if (!groups.low.same_shape(groups.high)) {
    throw ShapeError("idwt_channel: groups differ in shape");
  }
  const std::array<Tensor3, 2> parts{groups.low, groups.high};
  Tensor3 packed = concat_channels(parts);
  dwt_channel_packed(packed, kind, Pass::kInverse, mode);
  return packed;
}

SubbandTensor::SubbandTensor(SpatialPyramid low_group,
                             SpatialPyramid high_group)
    : low_(std::move(low_group)), high_(std::move(high_group)) {
  if (low_.levels != high_.levels || !low_.ll.same_shape(high_.ll)) {
    throw ShapeError("SubbandTensor: channel groups disagree");
  }
}

const SpatialPyramid& SubbandTensor::group(char g) const {
  if (g == 'L') return low_;
  if (g == 'H') return high_;
  throw RangeError(std::string("unknown channel group '") + g + "'");
}

namespace {

SpatialBand parse_band(std::string_view s) {
  if (s == "LL") return SpatialBand::kLL;
  if (s == "LH") return SpatialBand::kLH;
  if (s == "HL") return SpatialBand::kHL;
  if (s == "HH") return SpatialBand::kHH;
  throw RangeError("unknown spatial band '" + std::string(s) + "'");
}

}  // namespace

const Tensor3& SubbandTensor::operator[](std::string_view label) const {
  if (label.size() == 3) {
    if (spatial_levels() != 1) {
      throw RangeError("three-letter labels need one spatial level");
    }
    return group(label[0]).band(parse_band(label.substr(1, 2)), 1);
  }
  if (label.size() == 5 && label[1] == '.' && label[4] >= '1' &&
      label[4] <= '9') {
    return group(label[0]).band(parse_band(label.substr(2, 2)), label[4] - '0');
  }
  throw RangeError("malformed subband label '" + std::string(label) + "'");
}

std::vector<std::string> SubbandTensor::labels() const {
  std::vector<std::string> out;
  const int levels = spatial_levels();
  for (char g : {'L', 'H'}) {
    auto emit = [&](SpatialBand b, int level) {
      if (levels == 1) {
        out.push_back(std::string(1, g) + std::string(band_name(b)));
      } else {
        out.push_back(std::string(1, g) + "." + std::string(band_name(b)) +
                      std::to_string(level));
      }
    };
    emit(SpatialBand::kLL, levels);
    for (int l = levels; l >= 1; --l) {
      emit(SpatialBand::kLH, l);
      emit(SpatialBand::kHL, l);
      emit(SpatialBand::kHH, l);
    }
  }
  return out;
}

std::size_t SubbandTensor::element_count() const {
  return low_.element_count() + high_.element_count();
}

void dwt3d_packed(Tensor3& t, WaveletKind channel_kind,
                  WaveletKind spatial_kind, int spatial_levels, Pass pass,
                  LiftingMode mode) {
  check_plane_dims(t.height(), t.width(), spatial_levels);
  if (t.channels() % 2 != 0) {
    throw ShapeError("dwt3d: channel count must be even");
  }
  // Forward is S * C (channel first). Inverse is C^-1 * S^-1, the adjoint of
  // the forward is C^T * S^T and the adjoint of the inverse S^-T * C^-T.
  switch (pass) {
    case Pass::kForward:
    case Pass::kInverseAdjoint:
      dwt_channel_packed(t, channel_kind, pass, mode);
      dwt2d_packed(t, spatial_kind, spatial_levels, pass, mode);
      break;
    case Pass::kInverse:
    case Pass::kForwardAdjoint:
      dwt2d_packed(t, spatial_kind, spatial_levels, pass, mode);
      dwt_channel_packed(t, channel_kind, pass, mode);
      break;
  }
}

SubbandTensor unpack_subbands(const Tensor3& packed, int spatial_levels) {
  const int half = packed.channels() / 2;
  if (packed.channels() % 2 != 0) throw ShapeError("odd channel count");
  return SubbandTensor(
      unpack_pyramid(slice_channels(packed, 0, half), spatial_levels),
      unpack_pyramid(slice_channels(packed, half, packed.channels()),
                     spatial_levels));
}

Tensor3 pack_subbands(const SubbandTensor& s) {
  const std::array<Tensor3, 2> parts{pack_pyramid(s.low_group()),
                                     pack_pyramid(s.high_group())};
  return concat_channels(parts);
}

SubbandTensor dwt3d(const Tensor3& t, WaveletKind channel_kind,
                    WaveletKind spatial_kind, int spatial_levels,
                    LiftingMode mode) {
  Tensor3 packed = t;
  dwt3d_packed(packed, channel_kind, spatial_kind, spatial_levels,
               Pass::kForward, mode);
  return unpack_subbands(packed, spatial_levels);
}

Tensor3 idwt3d(const SubbandTensor& s, WaveletKind channel_kind,
               WaveletKind spatial_kind, LiftingMode mode) {
  Tensor3 packed = pack_subbands(s);
  dwt3d_packed(packed, channel_kind, spatial_kind, s.spatial_levels(),
               Pass::kInverse, mode);
  return packed;
}

BandStats band_stats(std::string label, const Tensor3& band) {
  BandStats out;
  out.label = std::move(label);
  out.count = band.size();
  std::map<long long, std::size_t> histogram;
  for (std::size_t i = 0; i < band.size(); ++i) {
    const double v = band.data()[i];
    out.energy += v * v;
    ++histogram[std::llround(v)];
  }
  for (const auto& [value, n] : histogram) {
    const double p = static_cast<double>(n) / static_cast<double>(out.count);
    out.entropy_bits -= p * std::log2(p);
  }
  return out;
}

std::vector<BandStats> subband_stats(const SubbandTensor& s) {
  std::vector<BandStats> out;
  for (const std::string& label : s.labels()) {
    out.push_back(band_stats(label, s[label]));
  }
  return out;
}

std::vector<BandStats> pyramid_stats(const SpatialPyramid& p) {
  std::vector<BandStats> out;
  out.push_back(band_stats("LL" + std::to_string(p.levels), p.ll));
  for (int l = p.levels; l >= 1; --l) {
    for (SpatialBand b : {SpatialBand::kLH, SpatialBand::kHL, SpatialBand::kHH}) {
      out.push_back(band_stats(std::string(band_name(b)) + std::to_string(l),
                               p.band(b, l)));
    }
  }
  return out;
}

}  // namespace wecodec
