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

#include "wecodec/kernels.h"

#include <algorithm>
#include <cstring>

#include "wecodec/tensor.h"

namespace wecodec::kernels {
namespace {

// Eight doubles; lanes are independent, so every lane sees the same
// multiply-then-add sequence as scalar code.
typedef double V8 __attribute__((vector_size(64)));

constexpr int kLanes = 8;
// Multiply-adds below which gemm_acc stays on the calling thread.
constexpr double kParallelWork = 1 << 20;

inline V8 load(const double* p) {
  V8 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store(double* p, V8 v) { std::memcpy(p, &v, sizeof(v)); }

// Sums 8 partial lanes in a fixed tree order.
inline double reduce_lanes(V8 l) {
  return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

// C[R x 8V] block at (i, j) += A[i.., :] * B[:, j..].
template <int R, int V>
inline void gemm_block(int i, int j, int k, const double* a,
                       std::ptrdiff_t a_rs, std::ptrdiff_t a_cs,
                       const double* b, int ldb, double* c, int ldc) {
  V8 acc[R][V];
  for (int r = 0; r < R; ++r) {
    for (int v = 0; v < V; ++v) acc[r][v] = load(c + (i + r) * ldc + j + 8 * v);
  }
  for (int p = 0; p < k; ++p) {
    const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb + j;
    V8 bv[V];
    for (int v = 0; v < V; ++v) bv[v] = load(bp + 8 * v);
    const double* ap = a + i * a_rs + p * a_cs;
    for (int r = 0; r < R; ++r) {
      const double av = ap[r * a_rs];
      for (int v = 0; v < V; ++v) acc[r][v] += av * bv[v];
    }
  }
  for (int r = 0; r < R; ++r) {
    for (int v = 0; v < V; ++v) store(c + (i + r) * ldc + j + 8 * v, acc[r][v]);
  }
}

template <int R>
inline void gemm_rows(int i, int n, int k, const double* a,
                      std::ptrdiff_t a_rs, std::ptrdiff_t a_cs,
                      const double* b, int ldb, double* c, int ldc) {
  int j = 0;
  for (; j + 16 <= n; j += 16) {
    gemm_block<R, 2>(i, j, k, a, a_rs, a_cs, b, ldb, c, ldc);
  }
  for (; j + 8 <= n; j += 8) {
    gemm_block<R, 1>(i, j, k, a, a_rs, a_cs, b, ldb, c, ldc);
  }
  if (j == n) return;
  for (int r = 0; r < R; ++r) {
    double* cr = c + (i + r) * ldc;
    for (int p = 0; p < k; ++p) {
      const double av = a[(i + r) * a_rs + p * a_cs];
      const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
      for (int q = j; q < n; ++q) cr[q] += av * bp[q];
    }
  }
}

}  // namespace

void gemm_acc(int m, int n, int k, const double* a, std::ptrdiff_t a_rs,
              std::ptrdiff_t a_cs, const double* b, int ldb, double* c,
              int ldc) {
  const int blocks = m / 8;
  const double work = static_cast<double>(m) * n * k;
  if (blocks > 1 && work >= kParallelWork) {
    parallel_for(blocks, [&](int blk) {
      gemm_rows<8>(8 * blk, n, k, a, a_rs, a_cs, b, ldb, c, ldc);
    });
  } else {
    for (int blk = 0; blk < blocks; ++blk) {
      gemm_rows<8>(8 * blk, n, k, a, a_rs, a_cs, b, ldb, c, ldc);
    }
  }
  int i = 8 * blocks;
  for (; i + 4 <= m; i += 4) gemm_rows<4>(i, n, k, a, a_rs, a_cs, b, ldb, c, ldc);
  for (; i < m; ++i) gemm_rows<1>(i, n, k, a, a_rs, a_cs, b, ldb, c, ldc);
}

void gemm_nt_acc(int m, int k, int n, const double* a, int lda,
                 const double* b, int ldb, double* c, int ldc) {
  const int body = n - n % kLanes;
  const int tail = n - body;
  // Lane l of a partial sum collects the products at q = l (mod 8); the tail
  // lands in the low lanes.
  auto tail_vec = [tail](const double* p) {
    V8 v = {};
    for (int l = 0; l < tail; ++l) v[l] = p[l];
    return v;
  };
  for (int i = 0; i < m; ++i) {
    const double* ar = a + static_cast<std::ptrdiff_t>(i) * lda;
    int p = 0;
    for (; p + 4 <= k; p += 4) {
      V8 acc[4] = {};
      const double* br[4];
      for (int r = 0; r < 4; ++r) {
        br[r] = b + static_cast<std::ptrdiff_t>(p + r) * ldb;
      }
      for (int q = 0; q < body; q += kLanes) {
        const V8 av = load(ar + q);
        for (int r = 0; r < 4; ++r) acc[r] += av * load(br[r] + q);
      }
      if (tail > 0) {
        const V8 av = tail_vec(ar + body);
        for (int r = 0; r < 4; ++r) acc[r] += av * tail_vec(br[r] + body);
      }
      for (int r = 0; r < 4; ++r) c[i * ldc + p + r] += reduce_lanes(acc[r]);
    }
    for (; p < k; ++p) {
      V8 acc = {};
      const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
      for (int q = 0; q < body; q += kLanes) acc += load(ar + q) * load(bp + q);
      if (tail > 0) acc += tail_vec(ar + body) * tail_vec(bp + body);
      c[i * ldc + p] += reduce_lanes(acc);
    }
  }
}

void im2col(const double* in, int channels, int h, int w, int kernel,
            int stride, int pad, int out_h, int out_w, double* cols) {
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    const double* src = in + static_cast<std::ptrdiff_t>(c) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        double* dst = cols + ((c * kernel + ky) * kernel + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - pad;
          double* row = dst + oy * out_w;
          if (iy < 0 || iy >= h) {
            std::fill(row, row + out_w, 0.0);
            continue;
          }
          const double* srow = src + iy * w;
          if (stride == 1) {
            const int x_lo = std::clamp(pad - kx, 0, out_w);
            const int x_hi = std::clamp(w + pad - kx, x_lo, out_w);
            std::fill(row, row + x_lo, 0.0);
            for (int ox = x_lo; ox < x_hi; ++ox) row[ox] = srow[ox + kx - pad];
            std::fill(row + x_hi, row + out_w, 0.0);
          } else {
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox * stride + kx - pad;
              row[ox] = (ix >= 0 && ix < w) ? srow[ix] : 0.0;
            }
          }
        }
      }
    }
  }
}

void col2im(const double* cols, int channels, int h, int w, int kernel,
            int stride, int pad, int out_h, int out_w, double* out) {
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    double* dst = out + static_cast<std::ptrdiff_t>(c) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const double* src = cols + ((c * kernel + ky) * kernel + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          double* drow = dst + iy * w;
          const double* srow = src + oy * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace wecodec::kernels
