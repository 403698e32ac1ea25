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

// Reverse-mode differentiation over an explicit operation tape.
//
// Every op appends one node holding its output value and a backward rule.
// Tape::backward walks the nodes in exact reverse order of creation, so the
// gradient of every node is complete before its rule runs.

#ifndef WECODEC_AUTODIFF_H_
#define WECODEC_AUTODIFF_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wecodec/params.h"
#include "wecodec/tensor.h"
#include "wecodec/wavelet.h"

namespace wecodec {

class Tape;

// Handle to a tape node.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  const Tensor3& value() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the node's finished output gradient.
  using Backward = std::function<void(const Tensor3& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Value with no gradient.
  Var constant(Tensor3 value);
  // Value whose gradient is kept on the tape (read it with grad()).
  Var input(Tensor3 value);
  // Parameter leaf. backward() adds the node gradient into p.grad.
  Var param(Parameter& p);

  // Appends an op node. `backward` may be empty when no input needs a
  // gradient.
  Var record(std::string_view op, Tensor3 value, std::span<const Var> inputs,
             Backward backward);

  const Tensor3& value(Var v) const;
  bool requires_grad(Var v) const;
  // Gradient of an input leaf after backward(); zeros if it never received
  // one. Gradients of intermediate nodes are released once consumed.
  Tensor3 grad(Var v) const;
  // Adds g into the gradient of v (no-op when v needs no gradient).
  void accumulate(Var v, const Tensor3& g);
  void accumulate(Var v, Tensor3&& g);

  // Seeds d(loss)/d(loss) = 1 and runs every backward rule. `loss` must be a
  // 1x1x1 tensor.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(int id) const { return nodes_[id].op; }
  // Node ids in the order backward() visited them.
  const std::vector<int>& backward_order() const { return visit_order_; }

  // Non-smooth ops fold the branch each element takes into a running
  // signature. Two evaluations with equal signatures lie on the same smooth
  // piece of the graph.
  void mix_branch(std::uint64_t state) {
    branch_signature_ = (branch_signature_ ^ (state + 1)) * 0x100000001b3ULL;
  }
  std::uint64_t branch_signature() const { return branch_signature_; }

 private:
  struct Node {
    std::string op;
    Tensor3 value;
    Tensor3 grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
    bool leaf = false;
  };
  Var push(Node node);

  std::deque<Node> nodes_;
  std::vector<int> visit_order_;
  std::uint64_t branch_signature_ = 0xcbf29ce484222325ULL;
};

// Differentiable ops. Shapes are validated and mismatches throw ShapeError.
namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var square(Var a);
// Elementwise x^e for x > 0.
Var pow_scalar(Var a, double e);
Var leaky_relu(Var x, double slope);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
// Gradient passes only where lo < x < hi.
Var clamp(Var x, double lo, double hi);

Var concat(std::span<const Var> parts);
Var slice(Var x, int from, int to);

// Channels [c0, c1) of the spatial block (y0, x0, h, w).
Var crop(Var x, int c0, int c1, const BandRegion& region);
struct Placed {
  Var block;
  int c0;
  int y0;
  int x0;
};
// Tensor of the given shape holding every block at its offset; uncovered
// entries are zero.
Var assemble(int channels, int height, int width,
             std::span<const Placed> blocks);

Var avg_pool2(Var x);
// C x 1 x 1 mean over each channel.
Var global_avg_pool(Var x);
// x[c] * gate[c] with gate of shape C x 1 x 1.
Var channel_scale(Var x, Var gate);
// Repeats a C x 1 x 1 tensor over an h x w plane.
Var expand(Var v, int height, int width);

// Scalar (1x1x1) reductions.
Var sum(Var x);
Var mean(Var x);
Var mse(Var a, Var b);
Var weighted_sum(std::span<const Var> scalars, std::span<const double> w);

// Zero-padded K x K convolution, "same" size at stride 1.
//   transposed = false: x is C_in x H x W, weight C_out x C_in x K*K,
//     output C_out x H/s x W/s.
//   transposed = true: x is C_in x h x w, weight C_in x C_out x K*K, output
//     C_out x h*s x w*s (the adjoint of the strided convolution).
// bias may be invalid (no bias) or C_out x 1 x 1.
Var conv2d(Var x, Var weight, Var bias, int kernel, int stride,
           bool transposed);

// Linear wavelet maps in packed layout. pass must be kForward or kInverse;
// backward applies the matching adjoint pass.
Var dwt2d(Var x, WaveletKind kind, int levels, Pass pass);
Var dwt_channel(Var x, WaveletKind kind, Pass pass);
Var dwt3d(Var x, WaveletKind channel_kind, WaveletKind spatial_kind,
          int levels, Pass pass);

}  // namespace ad
}  // namespace wecodec

#endif  // WECODEC_AUTODIFF_H_
