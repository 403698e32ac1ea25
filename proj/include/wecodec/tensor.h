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

#ifndef WECODEC_TENSOR_H_
#define WECODEC_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace wecodec {

// Dense C x H x W array of doubles. Layout is channel-major, then row-major
// within a channel: element (c, y, x) lives at (c * H + y) * W + x. The
// layout is part of the bitstream contract, do not change it.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int channels, int height, int width, double fill = 0.0);

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(h_) * w_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool same_shape(const Tensor3& o) const {
    return c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  double& operator()(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x];
  }
  double operator()(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> plane(int c) {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> plane(int c) const {
    return std::span<const double>(data_).subspan(c * plane_size(),
                                                  plane_size());
  }

  void fill(double v);
  bool all_finite() const;

  // Elementwise helpers used by tests and the optimizer.
  Tensor3& operator+=(const Tensor3& o);
  double max_abs_diff(const Tensor3& o) const;
  double sum_squares() const;

  bool operator==(const Tensor3& o) const {
    return same_shape(o) && data_ == o.data_;
  }

 private:
  int c_ = 0;
  int h_ = 0;
  int w_ = 0;
  std::vector<double> data_;
};

// Copy of channels [from, to). Throws RangeError unless 0 <= from < to <= C.
Tensor3 slice_channels(const Tensor3& t, int from, int to);

// Stacks parts along the channel axis. Throws ShapeError on H/W mismatch and
// ArgumentError on an empty list.
Tensor3 concat_channels(std::span<const Tensor3> parts);

// Deterministic random source. The engine is std::mt19937_64 (fully
// specified by the C++ standard) and doubles are formed from the top 53 bits
// of each draw, so a seed yields the same stream on every conforming
// platform. Not thread-safe; one owner at a time.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  static constexpr const char* kAlgorithm = "mt19937_64/53-bit";

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Standard normal via Box-Muller on uniform01 (portable, unlike
  // std::normal_distribution).
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Tensor filled with U[lo, hi) draws in storage order.
Tensor3 seeded_uniform(SeededRng& rng, int channels, int height, int width,
                       double lo, double hi);

// Worker-thread cap taken from WECODEC_THREADS (default: hardware threads).
int worker_threads();
// Overrides the worker count (n >= 1) or restores the default (n = 0).
void set_worker_threads(int n);

// Runs fn(i) for i in [0, n) across worker_threads(). Callers must write to
// disjoint outputs so results do not depend on the thread count.
template <typename Fn>
void parallel_for(int n, Fn&& fn);

}  // namespace wecodec

#include "wecodec/parallel_inl.h"

#endif  // WECODEC_TENSOR_H_
