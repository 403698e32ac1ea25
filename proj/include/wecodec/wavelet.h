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

// Lifting-scheme wavelet transforms over 1D signals, image planes and the
// channel axis of a Tensor3.
//
// Conventions:
//  * Spatial transforms use whole-sample symmetric extension (JPEG 2000).
//  * Every transformed length must be even; callers pad.
//  * Haar is orthonormal: low = (a + b) / sqrt(2), high = (a - b) / sqrt(2).
//  * 5/3 and 9/7 follow the ISO/IEC 15444-1 lifting steps. The 9/7 low band
//    has unit DC gain.
//  * 5/3 has two arithmetic modes. kReversible applies the floor rounding of
//    the JPEG 2000 integer path; kLinear drops it. Network layers run kLinear
//    because rounding has no useful derivative.
//  * A spatial band label is (vertical, horizontal): "HL" is high-pass down
//    the columns and low-pass along the rows.
//  * 2D results are packed in Mallat layout: after one level the plane holds
//    LL | LH over HL | HH, and deeper levels recurse into the LL quadrant.

#ifndef WECODEC_WAVELET_H_
#define WECODEC_WAVELET_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wecodec/tensor.h"

namespace wecodec {

enum class WaveletKind : std::uint8_t {
  kHaar = 0,
  kLeGall53 = 1,
  kCdf97 = 2,
};

enum class LiftingMode : std::uint8_t { kReversible, kLinear };

// Which linear map a packed transform applies. The adjoint passes are the
// transposes used by backpropagation.
enum class Pass : std::uint8_t {
  kForward,
  kInverse,
  kForwardAdjoint,
  kInverseAdjoint,
};

std::string_view wavelet_name(WaveletKind kind);
// Accepts "haar", "5/3", "53", "9/7", "97". Throws ArgumentError otherwise.
WaveletKind parse_wavelet(std::string_view name);

struct LiftPair {
  std::vector<double> low;
  std::vector<double> high;
};

LiftPair lift_forward(std::span<const double> signal, WaveletKind kind,
                      LiftingMode mode = LiftingMode::kReversible);
std::vector<double> lift_inverse(std::span<const double> low,
                                 std::span<const double> high,
                                 WaveletKind kind,
                                 LiftingMode mode = LiftingMode::kReversible);

// In-place packed transforms. `plane` is h x w row-major. For kForward the
// input is a spatial plane and the output is its Mallat-packed pyramid.
void dwt2d_packed(std::span<double> plane, int h, int w, WaveletKind kind,
                  int levels, Pass pass,
                  LiftingMode mode = LiftingMode::kReversible);

// Applies dwt2d_packed to every channel.
void dwt2d_packed(Tensor3& t, WaveletKind kind, int levels, Pass pass,
                  LiftingMode mode = LiftingMode::kReversible);

// One-level transform along the channel axis at every pixel. Forward output
// holds the low group in channels [0, C/2) and the high group in [C/2, C).
void dwt_channel_packed(Tensor3& t, WaveletKind kind, Pass pass,
                        LiftingMode mode = LiftingMode::kReversible);

enum class SpatialBand : std::uint8_t { kLL = 0, kLH = 1, kHL = 2, kHH = 3 };

std::string_view band_name(SpatialBand band);

// Region of a packed plane holding one band at `level` (1 = finest).
struct BandRegion {
  int y0;
  int x0;
  int height;
  int width;
};
BandRegion band_region(int h, int w, SpatialBand band, int level);

// Multi-level 2D decomposition of every channel of a tensor.
struct SpatialPyramid {
  int levels = 0;
  Tensor3 ll;  // deepest low band
  // details[l - 1] holds {LH, HL, HH} at level l.
  std::vector<std::array<Tensor3, 3>> details;

  const Tensor3& band(SpatialBand b, int level) const;
  std::size_t element_count() const;
};

SpatialPyramid dwt2d_multi(const Tensor3& planes, WaveletKind kind, int levels,
                           LiftingMode mode = LiftingMode::kReversible);
Tensor3 idwt2d_multi(const SpatialPyramid& pyramid, WaveletKind kind,
                     LiftingMode mode = LiftingMode::kReversible);

struct ChannelGroups {
  Tensor3 low;
  Tensor3 high;
};

ChannelGroups dwt_channel(const Tensor3& t, WaveletKind kind,
                          LiftingMode mode = LiftingMode::kReversible);
Tensor3 idwt_channel(const ChannelGroups& groups, WaveletKind kind,
                     LiftingMode mode = LiftingMode::kReversible);

// Result of a channel DWT followed by a multi-level spatial DWT per group.
// With one spatial level the eight bands are labelled LLL ... HHH: the first
// letter is the channel band, the other two the spatial band.
class SubbandTensor {
 public:
  SubbandTensor() = default;
  SubbandTensor(SpatialPyramid low_group, SpatialPyramid high_group);

  int spatial_levels() const { return low_.levels; }
  const SpatialPyramid& low_group() const { return low_; }
  const SpatialPyramid& high_group() const { return high_; }
  const SpatialPyramid& group(char g) const;

  // Label forms: "LHL" (one level) or "L.HL2" (any level count).
  const Tensor3& operator[](std::string_view label) const;
  std::vector<std::string> labels() const;
  std::size_t element_count() const;

 private:
  SpatialPyramid low_;
  SpatialPyramid high_;
};

SubbandTensor dwt3d(const Tensor3& t, WaveletKind channel_kind,
                    WaveletKind spatial_kind, int spatial_levels,
                    LiftingMode mode = LiftingMode::kReversible);
Tensor3 idwt3d(const SubbandTensor& s, WaveletKind channel_kind,
               WaveletKind spatial_kind,
               LiftingMode mode = LiftingMode::kReversible);

// Packed 3D transform: channel DWT then per-channel spatial DWT (forward), or
// the reverse composition for the other passes.
void dwt3d_packed(Tensor3& t, WaveletKind channel_kind,
                  WaveletKind spatial_kind, int spatial_levels, Pass pass,
                  LiftingMode mode = LiftingMode::kReversible);

// Conversions between the packed layout and SubbandTensor.
SubbandTensor unpack_subbands(const Tensor3& packed, int spatial_levels);
Tensor3 pack_subbands(const SubbandTensor& s);

// Energy and first-order entropy of one band. Entropy is taken over the
// coefficients rounded to the nearest integer, in bits per coefficient.
struct BandStats {
  std::string label;
  std::size_t count = 0;
  double energy = 0.0;
  double entropy_bits = 0.0;
};
BandStats band_stats(std::string label, const Tensor3& band);

// Every band of a 3D decomposition, in labels() order.
std::vector<BandStats> subband_stats(const SubbandTensor& s);
// Spatial-only decomposition: LL<L>, then LH/HL/HH from coarsest to finest.
std::vector<BandStats> pyramid_stats(const SpatialPyramid& p);

}  // namespace wecodec

#endif  // WECODEC_WAVELET_H_
