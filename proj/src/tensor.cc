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

#include "wecodec/tensor.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>

#include "wecodec/errors.h"

namespace wecodec {

Tensor3::Tensor3(int channels, int height, int width, double fill)
    : c_(channels), h_(height), w_(width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw ShapeError("Tensor3 dims must be >= 1, got " +
                     std::to_string(channels) + "x" + std::to_string(height) +
                     "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

void Tensor3::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor3::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  if (!same_shape(o)) throw ShapeError("Tensor3 += shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

double Tensor3::max_abs_diff(const Tensor3& o) const {
  if (!same_shape(o)) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    m = std::max(m, std::abs(data_[i] - o.data_[i]));
  }
  return m;
}

double Tensor3::sum_squares() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

Tensor3 slice_channels(const Tensor3& t, int from, int to) {
  if (from < 0 || from >= to || to > t.channels()) {
    throw RangeError("slice_channels: invalid range [" + std::to_string(from) +
                     ", " + std::to_string(to) + ") for " +
                     std::to_string(t.channels()) + " channels");
  }
  Tensor3 out(to - from, t.height(), t.width());
  auto src = t.data().subspan(from * t.plane_size(),
                              (to - from) * t.plane_size());
  std::copy(src.begin(), src.end(), out.data().begin());
  return out;
}

Tensor3 concat_channels(std::span<const Tensor3> parts) {
  if (parts.empty()) throw ArgumentError("concat_channels: empty list");
  const int h = parts[0].height();
  const int w = parts[0].width();
  int c = 0;
  for (const auto& p : parts) {
    if (p.height() != h || p.width() != w) {
      throw ShapeError("concat_channels: spatial dims differ");
    }
    c += p.channels();
  }
  Tensor3 out(c, h, w);
  auto dst = out.data().begin();
  for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

double SeededRng::normal() {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  // Rejection sampling keeps the result unbiased and portable.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

Tensor3 seeded_uniform(SeededRng& rng, int channels, int height, int width,
                       double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("seeded_uniform: need lo < hi");
  Tensor3 out(channels, height, width);
  for (double& v : out.data()) {
    v = rng.uniform(lo, hi);
    // lo + (hi - lo) * u can round up to hi for u close to 1.
    if (v >= hi) v = std::nextafter(hi, lo);
  }
  return out;
}

namespace {
std::atomic<int> g_thread_override{0};
}  // namespace

int worker_threads() {
  static const int cached = [] {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("WECODEC_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1) n = std::min(n, cap);
    }
    return n;
  }();
  const int forced = g_thread_override.load(std::memory_order_relaxed);
  return forced > 0 ? forced : cached;
}

void set_worker_threads(int n) {
  if (n < 0) throw ArgumentError("set_worker_threads: negative count");
  g_thread_override.store(n, std::memory_order_relaxed);
}

}  // namespace wecodec
