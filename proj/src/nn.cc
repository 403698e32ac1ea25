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

#include "wecodec/nn.h"

#include <algorithm>
#include <cmath>

#include "wecodec/errors.h"

namespace wecodec {

std::size_t param_count(const ConvSpec& spec) {
  const std::size_t k = static_cast<std::size_t>(spec.kernel) * spec.kernel;
  return k * spec.in_channels * spec.out_channels + spec.out_channels;
}

void validate(const ConvSpec& spec) {
  if (spec.kernel < 1 || spec.kernel % 2 == 0) {
    throw ArgumentError("conv kernel must be odd");
  }
  if (spec.stride < 1 || spec.in_channels < 1 || spec.out_channels < 1) {
    throw ArgumentError("conv stride and channel counts must be positive");
  }
}

Conv2d::Conv2d(ParamStore& store, const std::string& name,
               const ConvSpec& spec, SeededRng& rng, double gain)
    : spec_(spec) {
  validate(spec);
  const int kk = spec.kernel * spec.kernel;
  const int rows = spec.transposed ? spec.in_channels : spec.out_channels;
  const int cols = spec.transposed ? spec.out_channels : spec.in_channels;
  double fan_in = static_cast<double>(spec.in_channels) * kk;
  if (spec.transposed) fan_in /= spec.stride * spec.stride;
  const double bound = gain * std::sqrt(3.0 / std::max(fan_in, 1.0));
  Tensor3 w(rows, cols, kk);
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  const auto u = [](int v) { return static_cast<std::uint32_t>(v); };
  weight_ = &store.add(name + ".w",
                       {u(rows), u(cols), u(spec.kernel), u(spec.kernel)},
                       std::move(w));
  bias_ = &store.add(name + ".b", {u(spec.out_channels)},
                     Tensor3(spec.out_channels, 1, 1));
  if (weight_->count() + bias_->count() != param_count(spec)) {
    throw ContractError("conv parameter allocation does not match its spec");
  }
}

Var Conv2d::operator()(Tape& tape, Var x) const {
  if (weight_ == nullptr) throw StateError("conv layer not initialised");
  if (x.value().channels() != spec_.in_channels) {
    throw ShapeError("conv input has " +
                     std::to_string(x.value().channels()) +
                     " channels, expected " +
                     std::to_string(spec_.in_channels));
  }
  return ad::conv2d(x, tape.param(*weight_), tape.param(*bias_), spec_.kernel,
                    spec_.stride, spec_.transposed);
}

ResBlock::ResBlock(ParamStore& store, const std::string& name, int channels,
                   SeededRng& rng, double slope)
    : slope_(slope) {
  const ConvSpec spec{3, 1, channels, channels, false};
  a_ = Conv2d(store, name + ".conv1", spec, rng);
  b_ = Conv2d(store, name + ".conv2", spec, rng, 0.1);
}

Var ResBlock::operator()(Tape& tape, Var x) const {
  Var h = ad::leaky_relu(a_(tape, x), slope_);
  return ad::add(x, b_(tape, h));
}

std::size_t ResBlock::param_count() const {
  return wecodec::param_count(a_.spec()) + wecodec::param_count(b_.spec());
}

ResGroup::ResGroup(ParamStore& store, const std::string& name, int channels,
                   int blocks, SeededRng& rng, double slope) {
  if (blocks < 0) throw ArgumentError("negative residual block count");
  for (int i = 0; i < blocks; ++i) {
    blocks_.emplace_back(store, name + ".block" + std::to_string(i), channels,
                         rng, slope);
  }
}

Var ResGroup::operator()(Tape& tape, Var x) const {
  for (const ResBlock& b : blocks_) x = b(tape, x);
  return x;
}

std::size_t ResGroup::param_count() const {
  std::size_t n = 0;
  for (const ResBlock& b : blocks_) n += b.param_count();
  return n;
}

void adam_step(ParamStore& store, const AdamConfig& cfg, int t) {
  if (t < 1) throw ArgumentError("adam step index must be >= 1");
  for (const Parameter& p : store.all()) {
    if (!p.has_grad) throw StateError("parameter without gradient: " + p.name);
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (Parameter& p : store.all()) {
    for (std::size_t i = 0; i < p.count(); ++i) {
      const double g = p.grad[i];
      p.adam_m[i] = cfg.beta1 * p.adam_m[i] + (1.0 - cfg.beta1) * g;
      p.adam_v[i] = cfg.beta2 * p.adam_v[i] + (1.0 - cfg.beta2) * g * g;
      const double mh = p.adam_m[i] / c1;
      const double vh = p.adam_v[i] / c2;
      p.value[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  double ss = 0.0;
  for (const Parameter& p : store.all()) ss += p.grad.sum_squares();
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (Parameter& p : store.all()) {
      for (double& g : p.grad.data()) g *= k;
    }
  }
  return norm;
}

namespace {

struct Evaluation {
  double loss = 0.0;
  std::uint64_t branches = 0;
};

Evaluation eval_loss(const LossFn& fn, const std::vector<Tensor3>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor3& t : inputs) vars.push_back(tape.constant(t));
  const Tensor3& v = fn(tape, vars).value();
  if (v.size() != 1) throw ShapeError("grad_check: loss must be scalar");
  if (!std::isfinite(v[0])) throw NumericError("grad_check: non-finite loss");
  return {v[0], tape.branch_signature()};
}

std::vector<std::size_t> probe_indices(std::size_t n, int samples,
                                       SeededRng& rng) {
  std::vector<std::size_t> idx;
  if (samples <= 0 || static_cast<std::size_t>(samples) >= n) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  for (int i = 0; i < samples; ++i) idx.push_back(rng.below(n));
  return idx;
}

}  // namespace

GradCheckResult grad_check(const LossFn& fn, std::vector<Tensor3>& inputs,
                           ParamStore* params,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ArgumentError("grad_check: eps must be > 0");
  // Analytic pass.
  if (params != nullptr) params->zero_grad();
  std::vector<Tensor3> analytic_inputs;
  double loss0 = 0.0;
  std::uint64_t branches0 = 0;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor3& t : inputs) vars.push_back(tape.input(t));
    Var loss = fn(tape, vars);
    if (!std::isfinite(loss.value()[0])) {
      throw NumericError("grad_check: non-finite loss");
    }
    loss0 = loss.value()[0];
    branches0 = tape.branch_signature();
    tape.backward(loss);
    for (const Var& v : vars) analytic_inputs.push_back(tape.grad(v));
  }

  GradCheckResult result;
  SeededRng rng(options.seed);
  const double eps = options.eps;
  const double floor =
      std::max(options.floor, options.loss_floor * std::fabs(loss0));
  // Returns false when the step crosses a kink and the probe was discarded.
  auto probe = [&](double& slot, double analytic, const std::string& label) {
    const double saved = slot;
    slot = saved + eps;
    const Evaluation p = eval_loss(fn, inputs);
    slot = saved - eps;
    const Evaluation m = eval_loss(fn, inputs);
    slot = saved;
    if (options.skip_kinks &&
        (p.branches != branches0 || m.branches != branches0)) {
      ++result.kinked;
      return false;
    }
    const double numeric = (p.loss - m.loss) / (2.0 * eps);
    const double denom =
        std::max({std::fabs(analytic), std::fabs(numeric), floor});
    const double rel = std::fabs(analytic - numeric) / denom;
    ++result.checked;
    if (rel > result.max_rel_error || result.worst.empty()) {
      result.max_rel_error = rel;
      result.worst = label;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
    return true;
  };
  // Sampled probes that hit a kink are replaced by another random coordinate.
  auto probe_tensor = [&](Tensor3& values, const Tensor3& grad,
                          const std::string& name) {
    const bool sampled = options.samples_per_tensor > 0 &&
                         static_cast<std::size_t>(options.samples_per_tensor) <
                             values.size();
    for (std::size_t i :
         probe_indices(values.size(), options.samples_per_tensor, rng)) {
      int redraws = 0;
      while (!probe(values[i], grad[i], name + "[" + std::to_string(i) + "]") &&
             sampled && redraws++ < options.max_redraws) {
        i = rng.below(values.size());
      }
    }
  };

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    probe_tensor(inputs[k], analytic_inputs[k], "input" + std::to_string(k));
  }
  if (params != nullptr) {
    for (Parameter& p : params->all()) {
      const Tensor3 grad = p.grad;
      probe_tensor(p.value, grad, p.name);
    }
  }
  return result;
}

}  // namespace wecodec
