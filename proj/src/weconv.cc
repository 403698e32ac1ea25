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

#include "wecodec/weconv.h"

#include "wecodec/errors.h"

namespace wecodec {

void validate(const WeConvConfig& cfg) {
  if (cfg.in_channels < 1 || cfg.out_channels < 2 ||
      cfg.out_channels % 2 != 0) {
    throw ArgumentError("weconv: out channels must be even and positive");
  }
  if (cfg.stride != 1 && cfg.stride != 2) {
    throw ArgumentError("weconv: stride must be 1 or 2");
  }
  if (cfg.levels < 1) throw ArgumentError("weconv: levels must be >= 1");
  if (cfg.hf_kernel < 1 || cfg.hf_kernel % 2 == 0) {
    throw ArgumentError("weconv: hf_kernel must be odd");
  }
}

std::vector<SubbandConv> subband_conv_plan(const WeConvConfig& cfg) {
  validate(cfg);
  const int half = cfg.out_channels / 2;
  std::vector<SubbandConv> plan;
  for (char group : {'L', 'H'}) {
    const std::string deep = std::to_string(cfg.levels);
    plan.push_back({group, "LL" + deep, SpatialBand::kLL, cfg.levels,
                    ConvSpec{3, 1, half, half, false}});
    for (int level = cfg.levels; level >= 1; --level) {
      for (SpatialBand b :
           {SpatialBand::kLH, SpatialBand::kHL, SpatialBand::kHH}) {
        plan.push_back({group,
                        std::string(band_name(b)) + std::to_string(level), b,
                        level, ConvSpec{cfg.hf_kernel, 1, half, half, false}});
      }
    }
  }
  return plan;
}

WeConv::WeConv(ParamStore& store, const std::string& name,
               const WeConvConfig& cfg, SeededRng& rng)
    : cfg_(cfg), plan_(subband_conv_plan(cfg)) {
  lead_ = Conv2d(store, name + ".conv",
                 {3, cfg.stride, cfg.in_channels, cfg.out_channels,
                  cfg.transposed},
                 rng);
  for (const SubbandConv& s : plan_) {
    subband_.emplace_back(store, name + "." + s.group + "." + s.subband,
                          s.spec, rng);
  }
  if (cfg.stride != 1 || cfg.in_channels != cfg.out_channels) {
    shortcut_.emplace(store, name + ".shortcut",
                      ConvSpec{1, cfg.stride, cfg.in_channels,
                               cfg.out_channels, cfg.transposed},
                      rng);
  }
}

std::size_t WeConv::param_count() const {
  std::size_t n = wecodec::param_count(lead_.spec());
  for (const SubbandConv& s : plan_) n += wecodec::param_count(s.spec);
  if (shortcut_) n += wecodec::param_count(shortcut_->spec());
  return n;
}

Var WeConv::operator()(Tape& tape, Var x) const {
  const Tensor3& xv = x.value();
  if (xv.channels() != cfg_.in_channels) {
    throw ShapeError("weconv: input channel mismatch");
  }
  const int unit = 1 << cfg_.levels;
  const int h = cfg_.transposed ? xv.height() * cfg_.stride
                                : xv.height() / cfg_.stride;
  const int w = cfg_.transposed ? xv.width() * cfg_.stride
                                : xv.width() / cfg_.stride;
  const bool fits = cfg_.transposed
                        ? h % unit == 0 && w % unit == 0
                        : xv.height() % (cfg_.stride * unit) == 0 &&
                              xv.width() % (cfg_.stride * unit) == 0;
  if (!fits) {
    throw ShapeError("weconv: spatial size not divisible by stride * 2^L");
  }

  Var feat = lead_(tape, x);
  Var packed = ad::dwt3d(feat, cfg_.channel_kind, cfg_.spatial_kind,
                         cfg_.levels, Pass::kForward);
  const int half = cfg_.out_channels / 2;
  std::vector<ad::Placed> blocks;
  blocks.reserve(plan_.size());
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const SubbandConv& s = plan_[i];
    const int c0 = s.group == 'L' ? 0 : half;
    const BandRegion r = band_region(h, w, s.band, s.level);
    Var band = ad::crop(packed, c0, c0 + half, r);
    blocks.push_back({subband_[i](tape, band), c0, r.y0, r.x0});
  }
  Var mixed = ad::assemble(cfg_.out_channels, h, w, blocks);
  Var out = ad::dwt3d(mixed, cfg_.channel_kind, cfg_.spatial_kind,
                      cfg_.levels, Pass::kInverse);
  Var skip = shortcut_ ? (*shortcut_)(tape, x) : x;
  return ad::add(out, skip);
}

}  // namespace wecodec
