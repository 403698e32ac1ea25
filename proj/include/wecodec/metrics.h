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

// Image quality metrics on 3 x H x W tensors with samples in [0, 1].

#ifndef WECODEC_METRICS_H_
#define WECODEC_METRICS_H_

#include <array>
#include <limits>

#include "wecodec/autodiff.h"
#include "wecodec/tensor.h"

namespace wecodec {

// Returned by psnr() for identical inputs.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

double mse(const Tensor3& a, const Tensor3& b);
// 10 log10(1 / MSE). Throws ShapeError on mismatched shapes.
double psnr(const Tensor3& a, const Tensor3& b);

// Five-scale MS-SSIM: 11-tap Gaussian window (sigma 1.5), valid filtering,
// K1 = 0.01, K2 = 0.03, dynamic range 1, 2x2 average pooling between scales
// (odd sizes drop the last row or column). Negative contrast-structure terms
// are clipped to zero. Computed per channel, then averaged.
inline constexpr int kMsSsimScales = 5;
inline constexpr int kMsSsimWindow = 11;
inline constexpr double kMsSsimSigma = 1.5;
inline constexpr std::array<double, kMsSsimScales> kMsSsimWeights = {
    0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
// Smallest side that survives four poolings with a full window.
inline constexpr int kMsSsimMinSide = 176;

// Throws ArgumentError when min(H, W) < kMsSsimMinSide.
double ms_ssim(const Tensor3& a, const Tensor3& b);
// -10 log10(1 - v); +infinity for v = 1.
double ms_ssim_db(double value);

// Differentiable MS-SSIM for training. Sizes must stay even through the
// poolings. Contrast-structure terms are clamped below at 1e-6 instead of 0
// so the fractional powers keep a finite gradient.
Var ms_ssim(Var a, Var b);

}  // namespace wecodec

#endif  // WECODEC_METRICS_H_
