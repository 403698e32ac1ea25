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

// Wavelet-domain convolution layer.
//
// conv (K=3, stride s, or its transpose) -> channel DWT -> L-level spatial
// DWT per channel group -> one convolution per (group, subband) -> inverse
// DWTs -> plus shortcut. The deepest LL band gets a 3x3 kernel, every other
// band a hf_kernel x hf_kernel one. Subband convolutions keep the group
// width, so the inverse transform sees the same layout.

#ifndef WECODEC_WECONV_H_
#define WECODEC_WECONV_H_

#include <optional>
#include <string>
#include <vector>

#include "wecodec/autodiff.h"
#include "wecodec/nn.h"
#include "wecodec/wavelet.h"

namespace wecodec {

struct WeConvConfig {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  WaveletKind channel_kind = WaveletKind::kHaar;
  WaveletKind spatial_kind = WaveletKind::kCdf97;
  int levels = 2;
  int hf_kernel = 1;
  // Upsampling variant: the leading conv is transposed and the output is
  // stride times larger.
  bool transposed = false;
};

// Throws ArgumentError for odd out_channels, stride outside {1, 2}, levels
// below 1 or an even hf_kernel.
void validate(const WeConvConfig& cfg);

struct SubbandConv {
  char group;           // 'L' or 'H' (channel band)
  std::string subband;  // "LL2", "LH1", ...
  SpatialBand band;
  int level;
  ConvSpec spec;
};

// Deepest LL first, then LH, HL, HH from the deepest level up to level 1;
// the whole list for group L precedes group H.
std::vector<SubbandConv> subband_conv_plan(const WeConvConfig& cfg);

class WeConv {
 public:
  WeConv() = default;
  // Parameters are named `name`.conv, `name`.{group}.{subband} and
  // `name`.shortcut (when the shortcut is not the identity).
  WeConv(ParamStore& store, const std::string& name, const WeConvConfig& cfg,
         SeededRng& rng);

  // Throws ShapeError when the input channels or spatial size do not fit.
  Var operator()(Tape& tape, Var x) const;

  const WeConvConfig& config() const { return cfg_; }
  std::size_t param_count() const;
  bool identity_shortcut() const { return !shortcut_.has_value(); }

 private:
  WeConvConfig cfg_;
  Conv2d lead_;
  std::vector<SubbandConv> plan_;
  std::vector<Conv2d> subband_;
  std::optional<Conv2d> shortcut_;
};

}  // namespace wecodec

#endif  // WECODEC_WECONV_H_
