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

#include "wecodec/autodiff.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "wecodec/errors.h"
#include "wecodec/kernels.h"

namespace wecodec {

const Tensor3& Var::value() const { return tape_->value(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Tensor3 value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  n.leaf = true;
  return push(std::move(n));
}

Var Tape::input(Tensor3 value) {
  Node n;
  n.op = "input";
  n.value = std::move(value);
  n.requires_grad = true;
  n.leaf = true;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.op = "param:" + p.name;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  n.leaf = true;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Tensor3 value,
                 std::span<const Var> inputs, Backward backward) {
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (!v.valid()) continue;
    if (v.tape() != this) throw ArgumentError("op mixes tapes: " + n.op);
    if (nodes_[v.id()].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor3& Tape::value(Var v) const { return nodes_.at(v.id()).value; }

bool Tape::requires_grad(Var v) const {
  return nodes_.at(v.id()).requires_grad;
}

Tensor3 Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (!n.grad.empty()) return n.grad;
  return Tensor3(n.value.channels(), n.value.height(), n.value.width());
}

void Tape::accumulate(Var v, const Tensor3& g) {
  Node& n = nodes_.at(v.id());
  if (!n.requires_grad) return;
  if (!g.same_shape(n.value)) {
    throw ShapeError("gradient shape mismatch at " + n.op);
  }
  if (n.grad.empty()) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::accumulate(Var v, Tensor3&& g) {
  Node& n = nodes_.at(v.id());
  if (!n.requires_grad) return;
  if (!g.same_shape(n.value)) {
    throw ShapeError("gradient shape mismatch at " + n.op);
  }
  if (n.grad.empty()) {
    n.grad = std::move(g);
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  Node& root = nodes_.at(loss.id());
  if (root.value.size() != 1) {
    throw ShapeError("backward needs a scalar loss");
  }
  if (!root.requires_grad) return;
  visit_order_.clear();
  root.grad = Tensor3(1, 1, 1, 1.0);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    visit_order_.push_back(id);
    if (n.param != nullptr) {
      n.param->grad += n.grad;
      n.param->has_grad = true;
    } else if (n.backward) {
      n.backward(n.grad);
    }
    if (!n.leaf) n.grad = Tensor3();
  }
}

namespace ad {
namespace {

Tape* tape_of(Var a) {
  if (!a.valid()) throw ArgumentError("invalid Var");
  return a.tape();
}

Tensor3 zeros_like(const Tensor3& t) {
  return Tensor3(t.channels(), t.height(), t.width());
}

void check_same(const Tensor3& a, const Tensor3& b, const char* op) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch");
}

// y = f(x) elementwise; df(x, y) is the derivative.
template <typename F, typename D>
Var unary(const char* op, Var x, F f, D df) {
  Tape* t = tape_of(x);
  const Tensor3& xv = x.value();
  Tensor3 y = zeros_like(xv);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  const int self = static_cast<int>(t->size());
  const Var inputs[] = {x};
  return t->record(op, std::move(y), inputs, [t, x, self, df](const Tensor3& g) {
    const Tensor3& xv = x.value();
    const Tensor3& yv = t->value(Var(t, self));
    Tensor3 gx = zeros_like(xv);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = g[i] * df(xv[i], yv[i]);
    t->accumulate(x, std::move(gx));
  });
}

// Compensated (Neumaier) summation in index order. Large reductions such as
// a distortion over every pixel otherwise carry enough rounding to swamp
// finite-difference checks.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double compensated_sum(const double* p, std::size_t n) {
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(p[i]);
  return s.value();
}

}  // namespace

Var add(Var a, Var b) {
  Tape* t = tape_of(a);
  check_same(a.value(), b.value(), "add");
  Tensor3 y = a.value();
  y += b.value();
  const Var inputs[] = {a, b};
  return t->record("add", std::move(y), inputs, [t, a, b](const Tensor3& g) {
    t->accumulate(a, g);
    t->accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape* t = tape_of(a);
  check_same(a.value(), b.value(), "sub");
  Tensor3 y = a.value();
  const Tensor3& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const Var inputs[] = {a, b};
  return t->record("sub", std::move(y), inputs, [t, a, b](const Tensor3& g) {
    t->accumulate(a, g);
    if (b.requires_grad()) {
      Tensor3 gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = -gb[i];
      t->accumulate(b, std::move(gb));
    }
  });
}

Var mul(Var a, Var b) {
  Tape* t = tape_of(a);
  check_same(a.value(), b.value(), "mul");
  Tensor3 y = a.value();
  const Tensor3& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const Var inputs[] = {a, b};
  return t->record("mul", std::move(y), inputs, [t, a, b](const Tensor3& g) {
    const Tensor3& av = a.value();
    const Tensor3& bv = b.value();
    if (a.requires_grad()) {
      Tensor3 ga = zeros_like(av);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = g[i] * bv[i];
      t->accumulate(a, std::move(ga));
    }
    if (b.requires_grad()) {
      Tensor3 gb = zeros_like(bv);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = g[i] * av[i];
      t->accumulate(b, std::move(gb));
    }
  });
}

Var div(Var a, Var b) {
  Tape* t = tape_of(a);
  check_same(a.value(), b.value(), "div");
  Tensor3 y = a.value();
  const Tensor3& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= bv[i];
  const int self = static_cast<int>(t->size());
  const Var inputs[] = {a, b};
  return t->record("div", std::move(y), inputs,
                   [t, a, b, self](const Tensor3& g) {
    const Tensor3& bv = b.value();
    const Tensor3& yv = t->value(Var(t, self));
    if (a.requires_grad()) {
      Tensor3 ga = zeros_like(bv);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = g[i] / bv[i];
      t->accumulate(a, std::move(ga));
    }
    if (b.requires_grad()) {
      Tensor3 gb = zeros_like(bv);
      for (std::size_t i = 0; i < gb.size(); ++i) {
        gb[i] = -g[i] * yv[i] / bv[i];
      }
      t->accumulate(b, std::move(gb));
    }
  });
}

Var scale(Var a, double s) {
  return unary("scale", a, [s](double x) { return s * x; },
               [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary("add_scalar", a, [s](double x) { return x + s; },
               [](double, double) { return 1.0; });
}

Var square(Var a) {
  return unary("square", a, [](double x) { return x * x; },
               [](double x, double) { return 2.0 * x; });
}

Var pow_scalar(Var a, double e) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw NumericError("pow_scalar: base must be positive");
  }
  return unary("pow", a, [e](double x) { return std::pow(x, e); },
               [e](double x, double y) { return e * y / x; });
}

namespace {

void mix_signs(Var x) {
  Tape* t = x.tape();
  for (double v : x.value().data()) t->mix_branch(v > 0.0 ? 1 : 0);
}

}  // namespace

Var leaky_relu(Var x, double slope) {
  mix_signs(x);
  return unary("leaky_relu", x,
               [slope](double v) { return v > 0.0 ? v : slope * v; },
               [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var relu(Var x) {
  mix_signs(x);
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary("sigmoid", x,
               [](double v) {
                 if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var x) {
  return unary("exp", x, [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("clamp: lo must be below hi");
  for (double v : x.value().data()) {
    x.tape()->mix_branch(v <= lo ? 0 : (v >= hi ? 2 : 1));
  }
  return unary("clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [lo, hi](double v, double) {
                 return (v > lo && v < hi) ? 1.0 : 0.0;
               });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat: no inputs");
  Tape* t = tape_of(parts[0]);
  std::vector<Tensor3> values;
  values.reserve(parts.size());
  for (const Var& v : parts) values.push_back(v.value());
  Tensor3 y = concat_channels(values);
  std::vector<Var> ins(parts.begin(), parts.end());
  return t->record("concat", std::move(y), parts, [t, ins](const Tensor3& g) {
    int c0 = 0;
    for (const Var& v : ins) {
      const int c = v.value().channels();
      if (v.requires_grad()) t->accumulate(v, slice_channels(g, c0, c0 + c));
      c0 += c;
    }
  });
}

Var slice(Var x, int from, int to) {
  Tape* t = tape_of(x);
  Tensor3 y = slice_channels(x.value(), from, to);
  const Var inputs[] = {x};
  return t->record("slice", std::move(y), inputs,
                   [t, x, from](const Tensor3& g) {
    const Tensor3& xv = x.value();
    Tensor3 gx = zeros_like(xv);
    std::copy(g.data().begin(), g.data().end(),
              gx.data().begin() + from * xv.plane_size());
    t->accumulate(x, std::move(gx));
  });
}

Var crop(Var x, int c0, int c1, const BandRegion& r) {
  Tape* t = tape_of(x);
  const Tensor3& xv = x.value();
  if (c0 < 0 || c1 > xv.channels() || c0 >= c1 || r.y0 < 0 || r.x0 < 0 ||
      r.height < 1 || r.width < 1 || r.y0 + r.height > xv.height() ||
      r.x0 + r.width > xv.width()) {
    throw RangeError("crop: region outside tensor");
  }
  Tensor3 y(c1 - c0, r.height, r.width);
  for (int c = c0; c < c1; ++c) {
    for (int yy = 0; yy < r.height; ++yy) {
      for (int xx = 0; xx < r.width; ++xx) {
        y(c - c0, yy, xx) = xv(c, r.y0 + yy, r.x0 + xx);
      }
    }
  }
  const Var inputs[] = {x};
  return t->record("crop", std::move(y), inputs,
                   [t, x, c0, r](const Tensor3& g) {
    Tensor3 gx = zeros_like(x.value());
    for (int c = 0; c < g.channels(); ++c) {
      for (int yy = 0; yy < r.height; ++yy) {
        for (int xx = 0; xx < r.width; ++xx) {
          gx(c0 + c, r.y0 + yy, r.x0 + xx) = g(c, yy, xx);
        }
      }
    }
    t->accumulate(x, std::move(gx));
  });
}

Var assemble(int channels, int height, int width,
             std::span<const Placed> blocks) {
  if (blocks.empty()) throw ArgumentError("assemble: no blocks");
  Tape* t = tape_of(blocks[0].block);
  Tensor3 y(channels, height, width);
  std::vector<Var> ins;
  for (const Placed& p : blocks) {
    const Tensor3& b = p.block.value();
    if (p.c0 < 0 || p.y0 < 0 || p.x0 < 0 || p.c0 + b.channels() > channels ||
        p.y0 + b.height() > height || p.x0 + b.width() > width) {
      throw RangeError("assemble: block outside tensor");
    }
    for (int c = 0; c < b.channels(); ++c) {
      for (int yy = 0; yy < b.height(); ++yy) {
        for (int xx = 0; xx < b.width(); ++xx) {
          y(p.c0 + c, p.y0 + yy, p.x0 + xx) += b(c, yy, xx);
        }
      }
    }
    ins.push_back(p.block);
  }
  std::vector<Placed> placed(blocks.begin(), blocks.end());
  return t->record("assemble", std::move(y), ins, [t, placed](const Tensor3& g) {
    for (const Placed& p : placed) {
      if (!p.block.requires_grad()) continue;
      Tensor3 gb = zeros_like(p.block.value());
      for (int c = 0; c < gb.channels(); ++c) {
        for (int yy = 0; yy < gb.height(); ++yy) {
          for (int xx = 0; xx < gb.width(); ++xx) {
            gb(c, yy, xx) = g(p.c0 + c, p.y0 + yy, p.x0 + xx);
          }
        }
      }
      t->accumulate(p.block, std::move(gb));
    }
  });
}

Var avg_pool2(Var x) {
  Tape* t = tape_of(x);
  const Tensor3& xv = x.value();
  if (xv.height() % 2 != 0 || xv.width() % 2 != 0) {
    throw ShapeError("avg_pool2: odd spatial size");
  }
  Tensor3 y(xv.channels(), xv.height() / 2, xv.width() / 2);
  for (int c = 0; c < y.channels(); ++c) {
    for (int yy = 0; yy < y.height(); ++yy) {
      for (int xx = 0; xx < y.width(); ++xx) {
        y(c, yy, xx) = 0.25 * ((xv(c, 2 * yy, 2 * xx) + xv(c, 2 * yy, 2 * xx + 1)) +
                               (xv(c, 2 * yy + 1, 2 * xx) +
                                xv(c, 2 * yy + 1, 2 * xx + 1)));
      }
    }
  }
  const Var inputs[] = {x};
  return t->record("avg_pool2", std::move(y), inputs, [t, x](const Tensor3& g) {
    Tensor3 gx = zeros_like(x.value());
    for (int c = 0; c < gx.channels(); ++c) {
      for (int yy = 0; yy < gx.height(); ++yy) {
        for (int xx = 0; xx < gx.width(); ++xx) {
          gx(c, yy, xx) = 0.25 * g(c, yy / 2, xx / 2);
        }
      }
    }
    t->accumulate(x, std::move(gx));
  });
}

Var global_avg_pool(Var x) {
  Tape* t = tape_of(x);
  const Tensor3& xv = x.value();
  const std::size_t n = xv.plane_size();
  Tensor3 y(xv.channels(), 1, 1);
  for (int c = 0; c < xv.channels(); ++c) {
    y[c] = compensated_sum(xv.plane(c).data(), n) / static_cast<double>(n);
  }
  const Var inputs[] = {x};
  return t->record("global_avg_pool", std::move(y), inputs,
                   [t, x, n](const Tensor3& g) {
    Tensor3 gx = zeros_like(x.value());
    for (int c = 0; c < gx.channels(); ++c) {
      std::fill(gx.plane(c).begin(), gx.plane(c).end(),
                g[c] / static_cast<double>(n));
    }
    t->accumulate(x, std::move(gx));
  });
}

Var channel_scale(Var x, Var gate) {
  Tape* t = tape_of(x);
  const Tensor3& xv = x.value();
  const Tensor3& gv = gate.value();
  if (gv.channels() != xv.channels() || gv.height() != 1 || gv.width() != 1) {
    throw ShapeError("channel_scale: gate must be C x 1 x 1");
  }
  Tensor3 y = xv;
  for (int c = 0; c < y.channels(); ++c) {
    for (double& v : y.plane(c)) v *= gv[c];
  }
  const Var inputs[] = {x, gate};
  return t->record("channel_scale", std::move(y), inputs,
                   [t, x, gate](const Tensor3& g) {
    const Tensor3& xv = x.value();
    const Tensor3& gv = gate.value();
    if (x.requires_grad()) {
      Tensor3 gx = g;
      for (int c = 0; c < gx.channels(); ++c) {
        for (double& v : gx.plane(c)) v *= gv[c];
      }
      t->accumulate(x, std::move(gx));
    }
    if (gate.requires_grad()) {
      Tensor3 gg = zeros_like(gv);
      for (int c = 0; c < xv.channels(); ++c) {
        auto xp = xv.plane(c);
        auto gp = g.plane(c);
        double s = 0.0;
        for (std::size_t i = 0; i < xp.size(); ++i) s += gp[i] * xp[i];
        gg[c] = s;
      }
      t->accumulate(gate, std::move(gg));
    }
  });
}

Var expand(Var v, int height, int width) {
  Tape* t = tape_of(v);
  const Tensor3& vv = v.value();
  if (vv.plane_size() != 1) throw ShapeError("expand: input must be C x 1 x 1");
  Tensor3 y(vv.channels(), height, width);
  for (int c = 0; c < y.channels(); ++c) {
    std::fill(y.plane(c).begin(), y.plane(c).end(), vv[c]);
  }
  const Var inputs[] = {v};
  return t->record("expand", std::move(y), inputs, [t, v](const Tensor3& g) {
    Tensor3 gv(g.channels(), 1, 1);
    for (int c = 0; c < g.channels(); ++c) {
      gv[c] = compensated_sum(g.plane(c).data(), g.plane_size());
    }
    t->accumulate(v, std::move(gv));
  });
}

Var sum(Var x) {
  Tape* t = tape_of(x);
  const Tensor3& xv = x.value();
  Tensor3 y(1, 1, 1, compensated_sum(xv.data().data(), xv.size()));
  const Var inputs[] = {x};
  return t->record("sum", std::move(y), inputs, [t, x](const Tensor3& g) {
    const Tensor3& xv = x.value();
    t->accumulate(x, Tensor3(xv.channels(), xv.height(), xv.width(), g[0]));
  });
}

Var mean(Var x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var mse(Var a, Var b) {
  Tape* t = tape_of(a);
  check_same(a.value(), b.value(), "mse");
  const Tensor3& av = a.value();
  const Tensor3& bv = b.value();
  const double n = static_cast<double>(av.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s.add(d * d);
  }
  const Var inputs[] = {a, b};
  return t->record("mse", Tensor3(1, 1, 1, s.value() / n), inputs,
                   [t, a, b, n](const Tensor3& g) {
    const Tensor3& av = a.value();
    const Tensor3& bv = b.value();
    Tensor3 ga = zeros_like(av);
    const double k = 2.0 * g[0] / n;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = k * (av[i] - bv[i]);
    if (b.requires_grad()) {
      Tensor3 gb = ga;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = -gb[i];
      t->accumulate(b, std::move(gb));
    }
    t->accumulate(a, std::move(ga));
  });
}

Var weighted_sum(std::span<const Var> scalars, std::span<const double> w) {
  if (scalars.empty() || scalars.size() != w.size()) {
    throw ArgumentError("weighted_sum: size mismatch");
  }
  Tape* t = tape_of(scalars[0]);
  double s = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].value().size() != 1) {
      throw ShapeError("weighted_sum: inputs must be scalars");
    }
    s += w[i] * scalars[i].value()[0];
  }
  std::vector<Var> ins(scalars.begin(), scalars.end());
  std::vector<double> ws(w.begin(), w.end());
  return t->record("weighted_sum", Tensor3(1, 1, 1, s), scalars,
                   [t, ins, ws](const Tensor3& g) {
    for (std::size_t i = 0; i < ins.size(); ++i) {
      t->accumulate(ins[i], Tensor3(1, 1, 1, ws[i] * g[0]));
    }
  });
}

namespace {

void add_bias(Tensor3& y, const Tensor3& b) {
  for (int c = 0; c < y.channels(); ++c) {
    for (double& v : y.plane(c)) v += b[c];
  }
}

Tensor3 bias_grad(const Tensor3& g) {
  Tensor3 gb(g.channels(), 1, 1);
  for (int c = 0; c < g.channels(); ++c) {
    gb[c] = compensated_sum(g.plane(c).data(), g.plane_size());
  }
  return gb;
}

}  // namespace

Var conv2d(Var x, Var weight, Var bias, int kernel, int stride,
           bool transposed) {
  Tape* t = tape_of(x);
  const Tensor3& xv = x.value();
  const Tensor3& wv = weight.value();
  if (kernel < 1 || kernel % 2 == 0 || stride < 1) {
    throw ArgumentError("conv2d: kernel must be odd and stride positive");
  }
  const int kk = kernel * kernel;
  const int pad = kernel / 2;
  const int cin = xv.channels();
  if (wv.channels() != cin && transposed) {
    throw ShapeError("conv2d: weight/input channel mismatch");
  }
  if (wv.height() != cin && !transposed) {
    throw ShapeError("conv2d: weight/input channel mismatch");
  }
  if (wv.width() != kk) throw ShapeError("conv2d: weight kernel mismatch");
  const int cout = transposed ? wv.height() : wv.channels();
  if (bias.valid() && (bias.value().channels() != cout ||
                       bias.value().plane_size() != 1)) {
    throw ShapeError("conv2d: bias must be C_out x 1 x 1");
  }
  const bool pointwise = kernel == 1 && stride == 1;
  const Var inputs[] = {x, weight, bias};

  if (!transposed) {
    if (xv.height() % stride != 0 || xv.width() % stride != 0) {
      throw ShapeError("conv2d: size not divisible by stride");
    }
    const int h = xv.height();
    const int w = xv.width();
    const int ho = h / stride;
    const int wo = w / stride;
    const int n = ho * wo;
    const int rows = cin * kk;
    Tensor3 y(cout, ho, wo);
    if (bias.valid()) add_bias(y, bias.value());
    std::vector<double> cols;
    const double* bmat = xv.data().data();
    if (!pointwise) {
      cols.resize(static_cast<std::size_t>(rows) * n);
      kernels::im2col(xv.data().data(), cin, h, w, kernel, stride, pad, ho,
                      wo, cols.data());
      bmat = cols.data();
    }
    kernels::gemm_acc(cout, n, rows, wv.data().data(), rows, 1, bmat, n,
                      y.data().data(), n);
    return t->record("conv2d", std::move(y), inputs,
                     [=](const Tensor3& g) {
      const Tensor3& xv = x.value();
      const Tensor3& wv = weight.value();
      if (bias.valid() && bias.requires_grad()) {
        t->accumulate(bias, bias_grad(g));
      }
      std::vector<double> cols;
      const double* bmat = xv.data().data();
      if (!pointwise && weight.requires_grad()) {
        cols.resize(static_cast<std::size_t>(rows) * n);
        kernels::im2col(xv.data().data(), cin, h, w, kernel, stride, pad, ho,
                        wo, cols.data());
        bmat = cols.data();
      }
      if (weight.requires_grad()) {
        Tensor3 gw = zeros_like(wv);
        kernels::gemm_nt_acc(cout, rows, n, g.data().data(), n, bmat, n,
                             gw.data().data(), rows);
        t->accumulate(weight, std::move(gw));
      }
      if (x.requires_grad()) {
        Tensor3 gx = zeros_like(xv);
        if (pointwise) {
          kernels::gemm_acc(cin, n, cout, wv.data().data(), 1, rows,
                            g.data().data(), n, gx.data().data(), n);
        } else {
          std::vector<double> dcols(static_cast<std::size_t>(rows) * n, 0.0);
          kernels::gemm_acc(rows, n, cout, wv.data().data(), 1, rows,
                            g.data().data(), n, dcols.data(), n);
          kernels::col2im(dcols.data(), cin, h, w, kernel, stride, pad, ho,
                          wo, gx.data().data());
        }
        t->accumulate(x, std::move(gx));
      }
    });
  }

  const int h = xv.height();
  const int w = xv.width();
  const int ho = h * stride;
  const int wo = w * stride;
  const int n = h * w;
  const int rows = cout * kk;
  Tensor3 y(cout, ho, wo);
  if (pointwise) {
    kernels::gemm_acc(cout, n, cin, wv.data().data(), 1, rows,
                      xv.data().data(), n, y.data().data(), n);
  } else {
    std::vector<double> cols(static_cast<std::size_t>(rows) * n, 0.0);
    kernels::gemm_acc(rows, n, cin, wv.data().data(), 1, rows,
                      xv.data().data(), n, cols.data(), n);
    kernels::col2im(cols.data(), cout, ho, wo, kernel, stride, pad, h, w,
                    y.data().data());
  }
  if (bias.valid()) add_bias(y, bias.value());
  return t->record("conv2d_transposed", std::move(y), inputs,
                   [=](const Tensor3& g) {
    const Tensor3& xv = x.value();
    const Tensor3& wv = weight.value();
    if (bias.valid() && bias.requires_grad()) {
      t->accumulate(bias, bias_grad(g));
    }
    std::vector<double> gcols;
    const double* gmat = g.data().data();
    if (!pointwise) {
      gcols.resize(static_cast<std::size_t>(rows) * n);
      kernels::im2col(g.data().data(), cout, ho, wo, kernel, stride, pad, h, w,
                      gcols.data());
      gmat = gcols.data();
    }
    if (weight.requires_grad()) {
      Tensor3 gw = zeros_like(wv);
      kernels::gemm_nt_acc(cin, rows, n, xv.data().data(), n, gmat, n,
                           gw.data().data(), rows);
      t->accumulate(weight, std::move(gw));
    }
    if (x.requires_grad()) {
      Tensor3 gx = zeros_like(xv);
      kernels::gemm_acc(cin, n, rows, wv.data().data(), rows, 1, gmat, n,
                        gx.data().data(), n);
      t->accumulate(x, std::move(gx));
    }
  });
}

namespace {

Pass adjoint_of(Pass p) {
  switch (p) {
    case Pass::kForward:
      return Pass::kForwardAdjoint;
    case Pass::kInverse:
      return Pass::kInverseAdjoint;
    default:
      throw ArgumentError("wavelet op: pass must be forward or inverse");
  }
}

template <typename Apply>
Var linear_map(const char* op, Var x, Pass pass, Apply apply) {
  Tape* t = tape_of(x);
  const Pass adj = adjoint_of(pass);
  Tensor3 y = x.value();
  apply(y, pass);
  const Var inputs[] = {x};
  return t->record(op, std::move(y), inputs, [t, x, adj, apply](const Tensor3& g) {
    Tensor3 gx = g;
    apply(gx, adj);
    t->accumulate(x, std::move(gx));
  });
}

}  // namespace

Var dwt2d(Var x, WaveletKind kind, int levels, Pass pass) {
  return linear_map("dwt2d", x, pass, [kind, levels](Tensor3& v, Pass p) {
    dwt2d_packed(v, kind, levels, p, LiftingMode::kLinear);
  });
}

Var dwt_channel(Var x, WaveletKind kind, Pass pass) {
  return linear_map("dwt_channel", x, pass, [kind](Tensor3& v, Pass p) {
    dwt_channel_packed(v, kind, p, LiftingMode::kLinear);
  });
}

Var dwt3d(Var x, WaveletKind channel_kind, WaveletKind spatial_kind,
          int levels, Pass pass) {
  return linear_map("dwt3d", x, pass,
                    [channel_kind, spatial_kind, levels](Tensor3& v, Pass p) {
    dwt3d_packed(v, channel_kind, spatial_kind, levels, p,
                 LiftingMode::kLinear);
  });
}

}  // namespace ad
}  // namespace wecodec
