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

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "wecodec/autodiff.h"
#include "wecodec/byte_io.h"
#include "wecodec/checkpoint.h"
#include "wecodec/errors.h"
#include "wecodec/kernels.h"
#include "wecodec/nn.h"

namespace wecodec {
namespace {

std::vector<double> to_vec(const Tensor3& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

Tensor3 random_tensor(SeededRng& rng, int c, int h, int w) {
  return seeded_uniform(rng, c, h, w, -1.0, 1.0);
}

// sum(y * r) for a fixed random r, so every output coordinate matters.
Var project(Tape& tape, Var y, std::uint64_t seed) {
  SeededRng rng(seed);
  const Tensor3& v = y.value();
  Var r = tape.constant(
      seeded_uniform(rng, v.channels(), v.height(), v.width(), -1.0, 1.0));
  return ad::sum(ad::mul(y, r));
}

double check_unary(Var (*op)(Var), Tensor3 x, double floor = 1e-6) {
  std::vector<Tensor3> inputs{std::move(x)};
  GradCheckOptions opt;
  opt.floor = floor;
  return grad_check(
             [op](Tape& t, std::span<const Var> in) {
               return project(t, op(in[0]), 7);
             },
             inputs, nullptr, opt)
      .max_rel_error;
}

}  // namespace

TEST_CASE("gemm kernels match naive loops") {
  SeededRng rng(3);
  for (auto [m, n, k] : {std::array<int, 3>{1, 1, 1}, {4, 16, 3},
                         {7, 37, 11}, {9, 64, 20}, {5, 5, 1}}) {
    std::vector<double> a(m * k), b(k * n), c(m * n), ref(m * n);
    for (double& v : a) v = rng.uniform(-1, 1);
    for (double& v : b) v = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = ref[i] = rng.uniform(-1, 1);
    kernels::gemm_acc(m, n, k, a.data(), k, 1, b.data(), n, c.data(), n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int p = 0; p < k; ++p) ref[i * n + j] += a[i * k + p] * b[p * n + j];
      }
    }
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == ref[i]);

    // Transposed A via strides: A^T stored k x m.
    std::vector<double> at(k * m);
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
    }
    std::vector<double> c2(m * n, 0.0), c3(m * n, 0.0);
    kernels::gemm_acc(m, n, k, at.data(), 1, m, b.data(), n, c2.data(), n);
    kernels::gemm_acc(m, n, k, a.data(), k, 1, b.data(), n, c3.data(), n);
    CHECK(c2 == c3);

    // C[m x k] += A[m x n] B[k x n]^T
    std::vector<double> bt(k * n);
    for (double& v : bt) v = rng.uniform(-1, 1);
    std::vector<double> an(m * n);
    for (double& v : an) v = rng.uniform(-1, 1);
    std::vector<double> d(m * k, 0.0);
    kernels::gemm_nt_acc(m, k, n, an.data(), n, bt.data(), n, d.data(), k);
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) {
        double s = 0.0;
        for (int q = 0; q < n; ++q) s += an[i * n + q] * bt[p * n + q];
        CHECK(d[i * k + p] == doctest::Approx(s).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("im2col and col2im are adjoint") {
  SeededRng rng(5);
  for (auto [k, s] : {std::array<int, 2>{3, 1}, {3, 2}, {5, 1}, {5, 2}, {1, 1}}) {
    const int c = 2, h = 8, w = 6, ho = h / s, wo = w / s;
    std::vector<double> x(c * h * w), y(c * k * k * ho * wo);
    for (double& v : x) v = rng.uniform(-1, 1);
    for (double& v : y) v = rng.uniform(-1, 1);
    std::vector<double> cols(y.size()), back(x.size(), 0.0);
    kernels::im2col(x.data(), c, h, w, k, s, k / 2, ho, wo, cols.data());
    kernels::col2im(y.data(), c, h, w, k, s, k / 2, ho, wo, back.data());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += cols[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("param_count") {
  CHECK(param_count({1, 1, 1, 1, false}) == 2);
  CHECK(param_count({3, 1, 128, 128, false}) == 147584);
  CHECK(param_count({1, 1, 160, 160, false}) == 25760);
  CHECK(param_count({3, 2, 128, 3, true}) == 3459);
  CHECK_THROWS_AS(validate({2, 1, 1, 1, false}), ArgumentError);
}

TEST_CASE("conv layer allocation follows its spec") {
  ParamStore store;
  SeededRng rng(1);
  for (ConvSpec spec : {ConvSpec{3, 2, 3, 8, false}, ConvSpec{3, 2, 8, 3, true},
                        ConvSpec{1, 1, 5, 7, false}}) {
    Conv2d conv(store, "c" + std::to_string(store.size()), spec, rng);
    CHECK(conv.weight().count() + conv.bias().count() == param_count(spec));
  }
  CHECK_THROWS_AS(Conv2d(store, "c0", {3, 1, 1, 1, false}, rng), ArgumentError);
}

TEST_CASE("conv2d trivial cases") {
  Tape tape;
  SeededRng rng(2);
  // 1x1 identity.
  Tensor3 x = random_tensor(rng, 3, 4, 6);
  Tensor3 eye(3, 3, 1);
  for (int i = 0; i < 3; ++i) eye(i, i, 0) = 1.0;
  Var y = ad::conv2d(tape.constant(x), tape.constant(eye),
                     tape.constant(Tensor3(3, 1, 1)), 1, 1, false);
  CHECK(y.value() == x);

  // All-ones 3x3 on a constant field: interior is 9c.
  Tensor3 cst(1, 6, 6, 0.7);
  Var z = ad::conv2d(tape.constant(cst), tape.constant(Tensor3(1, 1, 9, 1.0)),
                     Var(), 3, 1, false);
  for (int yy = 1; yy < 5; ++yy) {
    for (int xx = 1; xx < 5; ++xx) CHECK(z.value()(0, yy, xx) == doctest::Approx(6.3));
  }
  CHECK(z.value()(0, 0, 0) == doctest::Approx(4 * 0.7));
}

TEST_CASE("conv2d matches direct summation") {
  SeededRng rng(4);
  for (auto [k, s] : {std::array<int, 2>{3, 1}, {3, 2}, {5, 2}, {1, 1}, {1, 2}}) {
    const int cin = 3, cout = 4, h = 8, w = 12;
    Tensor3 x = random_tensor(rng, cin, h, w);
    Tensor3 wt = random_tensor(rng, cout, cin, k * k);
    Tensor3 b = random_tensor(rng, cout, 1, 1);
    Tape tape;
    Var y = ad::conv2d(tape.constant(x), tape.constant(wt), tape.constant(b),
                       k, s, false);
    auto ref = oracle::direct_conv(to_vec(x), cin, h, w, to_vec(wt), to_vec(b),
                                   cout, k, s);
    REQUIRE(y.value().size() == ref.size());
    CHECK(y.value().height() == h / s);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(y.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }

    // Transposed conv: cin x h x w -> cout x h*s x w*s.
    Tensor3 wtt = random_tensor(rng, cin, cout, k * k);
    Var yt = ad::conv2d(tape.constant(x), tape.constant(wtt), tape.constant(b),
                        k, s, true);
    auto reft = oracle::direct_tconv(to_vec(x), cin, h, w, to_vec(wtt),
                                     to_vec(b), cout, k, s);
    CHECK(yt.value().height() == h * s);
    CHECK(yt.value().width() == w * s);
    for (std::size_t i = 0; i < reft.size(); ++i) {
      CHECK(yt.value()[i] == doctest::Approx(reft[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv2d shape errors") {
  Tape tape;
  Var x = tape.constant(Tensor3(3, 6, 6));
  CHECK_THROWS_AS(ad::conv2d(x, tape.constant(Tensor3(4, 2, 9)), Var(), 3, 1,
                             false),
                  ShapeError);
  Var odd = tape.constant(Tensor3(3, 5, 6));
  CHECK_THROWS_AS(ad::conv2d(odd, tape.constant(Tensor3(4, 3, 9)), Var(), 3, 2,
                             false),
                  ShapeError);
  ParamStore store;
  SeededRng rng(1);
  Conv2d conv(store, "c", {3, 1, 4, 2, false}, rng);
  CHECK_THROWS_AS(conv(tape, x), ShapeError);
}

TEST_CASE("conv2d gradients match finite differences") {
  SeededRng rng(11);
  for (auto [k, s, transposed] :
       {std::tuple<int, int, bool>{3, 1, false}, {3, 2, false}, {3, 2, true},
        {1, 1, false}, {1, 2, true}, {5, 1, false}}) {
    ParamStore store;
    Conv2d conv(store, "conv", {k, s, 4, 3, transposed}, rng);
    for (double& v : conv.bias().value.data()) v = rng.uniform(-1, 1);
    std::vector<Tensor3> inputs{random_tensor(rng, 4, 8, 8)};
    auto r = grad_check(
        [&](Tape& t, std::span<const Var> in) {
          return project(t, conv(t, in[0]), 3);
        },
        inputs, &store);
    INFO("k=" << k << " s=" << s << " worst=" << r.worst);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.checked == 256 + param_count(conv.spec()));
  }
}

TEST_CASE("leaky_relu") {
  Tape tape;
  Tensor3 x(1, 1, 3);
  x[0] = 2.0;
  x[1] = -1.0;
  x[2] = 0.0;
  Var y = ad::leaky_relu(tape.constant(x), 0.2);
  CHECK(y.value()[0] == 2.0);
  CHECK(y.value()[1] == doctest::Approx(-0.2));
  CHECK(y.value()[2] == 0.0);

  SeededRng rng(8);
  Tensor3 r = random_tensor(rng, 2, 5, 5);
  for (double& v : r.data()) {
    if (std::fabs(v) < 0.05) v = 0.5;
  }
  CHECK(check_unary([](Var v) { return ad::leaky_relu(v, 0.2); }, r) < 1e-6);
}

TEST_CASE("elementwise op gradients") {
  SeededRng rng(9);
  Tensor3 x = random_tensor(rng, 2, 4, 4);
  Tensor3 pos = seeded_uniform(rng, 2, 4, 4, 0.5, 2.0);
  CHECK(check_unary([](Var v) { return ad::sigmoid(v); }, x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::tanh(v); }, x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::exp(v); }, x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::square(v); }, x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::pow_scalar(v, 0.6); }, pos) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::scale(ad::add_scalar(v, 1.0), -3.0); },
                    x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::clamp(v, -0.5, 0.5); }, x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::avg_pool2(v); }, x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::global_avg_pool(v); }, x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::mean(v); }, x) < 1e-6);
  CHECK(check_unary(
            [](Var v) {
              return ad::crop(v, 1, 2, BandRegion{1, 2, 2, 2});
            },
            x) < 1e-6);
  CHECK(check_unary([](Var v) { return ad::slice(v, 1, 2); }, x) < 1e-6);

  std::vector<Tensor3> two{x, pos};
  auto binary = [&](auto op) {
    return grad_check(
               [op](Tape& t, std::span<const Var> in) {
                 return project(t, op(in[0], in[1]), 5);
               },
               two, nullptr)
        .max_rel_error;
  };
  CHECK(binary([](Var a, Var b) { return ad::add(a, b); }) < 1e-6);
  CHECK(binary([](Var a, Var b) { return ad::sub(a, b); }) < 1e-6);
  CHECK(binary([](Var a, Var b) { return ad::mul(a, b); }) < 1e-6);
  CHECK(binary([](Var a, Var b) { return ad::div(a, b); }) < 1e-6);
  CHECK(binary([](Var a, Var b) {
          const Var parts[] = {a, b, a};
          return ad::concat(parts);
        }) < 1e-6);
  CHECK(binary([](Var a, Var b) {
          const ad::Placed blocks[] = {{ad::slice(a, 0, 1), 0, 0, 0},
                                       {b, 1, 2, 3}};
          return ad::assemble(3, 6, 7, blocks);
        }) < 1e-6);
  CHECK(binary([](Var a, Var b) {
          return ad::channel_scale(a, ad::global_avg_pool(b));
        }) < 1e-6);
  CHECK(binary([](Var a, Var b) { return ad::mse(a, b); }) < 1e-6);
  CHECK(binary([](Var a, Var b) {
          const Var s[] = {ad::sum(a), ad::mean(b)};
          const double w[] = {0.3, -2.0};
          return ad::weighted_sum(s, w);
        }) < 1e-6);
}

TEST_CASE("wavelet op gradients") {
  SeededRng rng(10);
  Tensor3 x = random_tensor(rng, 4, 8, 8);
  for (WaveletKind k :
       {WaveletKind::kHaar, WaveletKind::kLeGall53, WaveletKind::kCdf97}) {
    for (Pass p : {Pass::kForward, Pass::kInverse}) {
      std::vector<Tensor3> in{x};
      // Some coordinates have gradients near 1e-4, where the central
      // difference carries ~1e-10 of rounding noise.
      GradCheckOptions opt;
      opt.floor = 1e-3;
      auto run = [&](auto op) {
        return grad_check(
                   [op](Tape& t, std::span<const Var> v) {
                     return project(t, op(v[0]), 2);
                   },
                   in, nullptr, opt)
            .max_rel_error;
      };
      CHECK(run([k, p](Var v) { return ad::dwt2d(v, k, 2, p); }) < 1e-6);
      CHECK(run([k, p](Var v) { return ad::dwt_channel(v, k, p); }) < 1e-6);
      CHECK(run([k, p](Var v) {
              return ad::dwt3d(v, WaveletKind::kHaar, k, 1, p);
            }) < 1e-6);
    }
  }
  Tape tape;
  CHECK_THROWS_AS(ad::dwt2d(tape.constant(x), WaveletKind::kHaar, 1,
                            Pass::kForwardAdjoint),
                  ArgumentError);
}

TEST_CASE("residual block") {
  SeededRng rng(12);
  ParamStore store;
  ResBlock block(store, "rb", 4, rng);
  Tensor3 x = random_tensor(rng, 4, 8, 8);
  {
    Tape tape;
    Var y = block(tape, tape.constant(x));
    CHECK(y.value().same_shape(x));
  }
  std::vector<Tensor3> inputs{x};
  auto r = grad_check(
      [&](Tape& t, std::span<const Var> in) {
        return project(t, block(t, in[0]), 4);
      },
      inputs, &store);
  CHECK(r.max_rel_error < 1e-4);

  for (Parameter& p : store.all()) p.value.fill(0.0);
  Tape tape;
  CHECK(block(tape, tape.constant(x)).value() == x);
  CHECK_THROWS_AS(block(tape, tape.constant(Tensor3(3, 8, 8))), ShapeError);
  CHECK(block.param_count() == 2 * param_count({3, 1, 4, 4, false}));
}

TEST_CASE("tape visits nodes in reverse creation order") {
  Tape tape;
  Var a = tape.input(Tensor3(1, 1, 1, 2.0));
  Var b = ad::square(a);
  Var c = ad::scale(b, 3.0);
  Var d = ad::add(c, b);
  Var loss = ad::sum(d);
  tape.backward(loss);
  const std::vector<int> expected{loss.id(), d.id(), c.id(), b.id(), a.id()};
  CHECK(tape.backward_order() == expected);
  CHECK(tape.grad(a)[0] == doctest::Approx(16.0));
  CHECK_THROWS_AS(tape.backward(tape.input(Tensor3(2, 1, 1))), ShapeError);
}

TEST_CASE("adam") {
  ParamStore store;
  Parameter& p = store.add("p", {1}, Tensor3(1, 1, 1, 0.5));
  AdamConfig cfg;
  CHECK_THROWS_AS(adam_step(store, cfg, 1), StateError);

  p.has_grad = true;
  adam_step(store, cfg, 1);
  CHECK(p.value[0] == 0.5);

  p.grad[0] = 1.0;
  adam_step(store, cfg, 1);
  CHECK(p.value[0] == doctest::Approx(0.5 - 1e-4).epsilon(1e-9));

  ParamStore s2;
  Parameter& q = s2.add("q", {1}, Tensor3(1, 1, 1, 0.0));
  for (int t = 1; t <= 100; ++t) {
    q.grad[0] = -0.3;
    q.has_grad = true;
    adam_step(s2, cfg, t);
  }
  CHECK(q.value[0] > 0.0);
  CHECK_THROWS_AS(adam_step(s2, cfg, 0), ArgumentError);
}

TEST_CASE("grad_check harness") {
  SeededRng rng(13);
  std::vector<Tensor3> inputs{random_tensor(rng, 2, 3, 3)};
  auto linear = grad_check(
      [](Tape& t, std::span<const Var> in) {
        return project(t, ad::scale(in[0], 2.5), 1);
      },
      inputs, nullptr);
  CHECK(linear.max_rel_error < 1e-8);

  // A square op whose backward claims d/dx = x instead of 2x.
  auto corrupted = grad_check(
      [](Tape& t, std::span<const Var> in) {
        Var x = in[0];
        Tensor3 y = x.value();
        for (double& v : y.data()) v *= v;
        const Var ins[] = {x};
        Var out = t.record("bad_square", std::move(y), ins,
                           [&t, x](const Tensor3& g) {
                             Tensor3 gx = g;
                             for (std::size_t i = 0; i < gx.size(); ++i) {
                               gx[i] *= x.value()[i];
                             }
                             t.accumulate(x, gx);
                           });
        return project(t, out, 1);
      },
      inputs, nullptr);
  CHECK(corrupted.max_rel_error > 1e-2);

  // Tiny gradients under a large loss are dominated by rounding in the
  // central difference; the loss-relative floor absorbs that.
  auto offset = [](Tape& t, std::span<const Var> in) {
    const Var parts[] = {ad::sum(in[0]), t.constant(Tensor3(1, 1, 1, 1e6))};
    const double w[] = {1e-9, 1.0};
    return ad::weighted_sum(parts, w);
  };
  CHECK(grad_check(offset, inputs, nullptr).max_rel_error < 1e-4);
  GradCheckOptions absolute;
  absolute.loss_floor = 0.0;
  absolute.floor = 1e-12;
  CHECK(grad_check(offset, inputs, nullptr, absolute).max_rel_error > 1e-2);

  // A leaky ReLU input within eps of zero: the central difference straddles
  // the kink and is discarded unless skip_kinks is off.
  std::vector<Tensor3> near_kink{Tensor3(1, 1, 2, 0.0)};
  near_kink[0][0] = 4e-6;
  near_kink[0][1] = 0.7;
  auto leaky = [](Tape&, std::span<const Var> in) {
    return ad::sum(ad::leaky_relu(in[0], 0.01));
  };
  const auto skipped = grad_check(leaky, near_kink, nullptr);
  CHECK(skipped.kinked == 1);
  CHECK(skipped.checked == 1);
  CHECK(skipped.max_rel_error < 1e-8);
  GradCheckOptions keep;
  keep.skip_kinks = false;
  const auto kept = grad_check(leaky, near_kink, nullptr, keep);
  CHECK(kept.kinked == 0);
  CHECK(kept.max_rel_error > 0.1);
  std::vector<Tensor3> wide{Tensor3(1, 1, 64, 0.5)};
  wide[0][0] = -2e-6;
  GradCheckOptions sampled;
  sampled.samples_per_tensor = 16;
  const auto redrawn = grad_check(leaky, wide, nullptr, sampled);
  CHECK(redrawn.checked == 16);
  CHECK(redrawn.max_rel_error < 1e-8);

  auto blowup = [](Tape&, std::span<const Var> in) {
    return ad::sum(ad::scale(in[0], std::numeric_limits<double>::infinity()));
  };
  CHECK_THROWS_AS(grad_check(blowup, inputs, nullptr), NumericError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  ParamStore store;
  SeededRng rng(14);
  Conv2d a(store, "enc.conv", {3, 2, 3, 5, false}, rng);
  Conv2d b(store, "dec.tconv", {3, 2, 5, 3, true}, rng);
  for (double& v : store.at("enc.conv.b").value.data()) v = rng.normal();
  store.at("dec.tconv.b").value[1] = -0.0;
  store.at("dec.tconv.b").value[2] = std::nextafter(1.0, 2.0);

  const std::string path = "nn_test_ckpt.bin";
  save_checkpoint(path, store);
  ParamStore other;
  SeededRng rng2(99);
  Conv2d a2(other, "enc.conv", {3, 2, 3, 5, false}, rng2);
  Conv2d b2(other, "dec.tconv", {3, 2, 5, 3, true}, rng2);
  load_checkpoint(path, other);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Tensor3& x = store.all()[i].value;
    const Tensor3& y = other.all()[i].value;
    for (std::size_t j = 0; j < x.size(); ++j) {
      CHECK(std::bit_cast<std::uint64_t>(x[j]) ==
            std::bit_cast<std::uint64_t>(y[j]));
    }
  }
  auto bytes = encode_checkpoint(store_records(store));
  CHECK(bytes == read_file(path));
  std::remove(path.c_str());

  CHECK_THROWS_AS(decode_checkpoint(std::vector<std::uint8_t>(bytes.begin(),
                                                              bytes.end() - 3)),
                  DecodeError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bytes), DecodeError);

  ParamStore wrong;
  Conv2d c(wrong, "enc.conv", {3, 2, 3, 6, false}, rng);
  CHECK_THROWS_AS(load_records(wrong, store_records(store)), ConfigError);
}

TEST_CASE("training step is reproducible") {
  auto run = [] {
    ParamStore store;
    SeededRng rng(21);
    Conv2d c1(store, "c1", {3, 2, 3, 6, false}, rng);
    Conv2d c2(store, "c2", {3, 2, 6, 3, true}, rng);
    Tensor3 x = seeded_uniform(rng, 3, 16, 16, 0.0, 1.0);
    for (int t = 1; t <= 3; ++t) {
      store.zero_grad();
      Tape tape;
      Var in = tape.constant(x);
      Var y = c2(tape, ad::leaky_relu(c1(tape, in), 0.2));
      tape.backward(ad::mse(y, in));
      adam_step(store, AdamConfig{1e-3}, t);
    }
    std::vector<double> out;
    for (const Parameter& p : store.all()) {
      out.insert(out.end(), p.value.data().begin(), p.value.data().end());
    }
    return out;
  };
  CHECK(run() == run());
}

}  // namespace wecodec
