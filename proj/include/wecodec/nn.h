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

// Layers, optimizer and gradient checking built on the tape.

#ifndef WECODEC_NN_H_
#define WECODEC_NN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wecodec/autodiff.h"
#include "wecodec/params.h"
#include "wecodec/tensor.h"

namespace wecodec {

inline constexpr double kDefaultLeakySlope = 0.2;

struct ConvSpec {
  int kernel = 3;
  int stride = 1;
  int in_channels = 1;
  int out_channels = 1;
  bool transposed = false;
};

// Weights plus biases: K^2 * C_in * C_out + C_out.
std::size_t param_count(const ConvSpec& spec);
// Throws ArgumentError for an even kernel or non-positive sizes.
void validate(const ConvSpec& spec);

class Conv2d {
 public:
  Conv2d() = default;
  // Registers `name`.w and `name`.b. Weights are uniform in +-gain*sqrt(3 /
  // fan_in), biases zero.
  Conv2d(ParamStore& store, const std::string& name, const ConvSpec& spec,
         SeededRng& rng, double gain = 1.0);

  Var operator()(Tape& tape, Var x) const;

  const ConvSpec& spec() const { return spec_; }
  Parameter& weight() const { return *weight_; }
  Parameter& bias() const { return *bias_; }

 private:
  ConvSpec spec_;
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

// x + conv(act(conv(x))) with 3x3 same-size convolutions.
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(ParamStore& store, const std::string& name, int channels,
           SeededRng& rng, double slope = kDefaultLeakySlope);

  Var operator()(Tape& tape, Var x) const;
  std::size_t param_count() const;
  const Conv2d& first() const { return a_; }
  const Conv2d& second() const { return b_; }

 private:
  Conv2d a_;
  Conv2d b_;
  double slope_ = kDefaultLeakySlope;
};

class ResGroup {
 public:
  ResGroup() = default;
  ResGroup(ParamStore& store, const std::string& name, int channels,
           int blocks, SeededRng& rng, double slope = kDefaultLeakySlope);

  Var operator()(Tape& tape, Var x) const;
  std::size_t param_count() const;
  int size() const { return static_cast<int>(blocks_.size()); }

 private:
  std::vector<ResBlock> blocks_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update for step t >= 1 over every parameter in store
// order. Throws StateError when a parameter has no gradient.
void adam_step(ParamStore& store, const AdamConfig& cfg, int t);

// Scales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before scaling.
double clip_grad_norm(ParamStore& store, double max_norm);

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates probed per tensor; 0 probes every coordinate.
  int samples_per_tensor = 0;
  std::uint64_t seed = 1;
  // Denominator floor for the relative error: the larger of `floor` and
  // loss_floor * |loss|. The second term tracks the central-difference
  // rounding noise, which grows with the loss magnitude.
  double floor = 1e-6;
  double loss_floor = 1e-6;
  // Discard probes whose +-eps evaluations take a different branch of a
  // non-smooth op (leaky ReLU, clamp, ...) than the analytic pass. Central
  // differences across a kink average two slopes.
  bool skip_kinks = true;
  // Replacement draws per sampled probe that crossed a kink.
  int max_redraws = 8;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // e.g. "input0[17]" or "conv.w[3]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t kinked = 0;  // probes discarded for crossing a kink
};

// Builds a scalar loss from tape inputs created for `inputs`.
using LossFn = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

// Compares tape gradients with central differences for every input tensor
// and every parameter in `params` (may be null). The relative error of one
// coordinate is |a - n| / max(|a|, |n|, floor, loss_floor * |loss|).
// Probes that straddle a kink are skipped (see skip_kinks). Throws
// NumericError when the loss is not finite.
GradCheckResult grad_check(const LossFn& fn, std::vector<Tensor3>& inputs,
                           ParamStore* params,
                           const GradCheckOptions& options = {});

}  // namespace wecodec

#endif  // WECODEC_NN_H_
