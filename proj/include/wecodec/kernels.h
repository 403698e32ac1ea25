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

// Dense kernels behind the convolution layers. Every output element is
// accumulated in an order fixed by the code (never by tiling, thread count
// or instruction set), so results are bit-reproducible.

#ifndef WECODEC_KERNELS_H_
#define WECODEC_KERNELS_H_

#include <cstddef>

namespace wecodec::kernels {

// C[M x N] += A[M x K] * B[K x N]. A is addressed as A[i * a_rs + k * a_cs]
// so a transposed operand is just a stride swap. B and C are row-major.
// Each C element adds its K products in ascending k.
void gemm_acc(int m, int n, int k, const double* a, std::ptrdiff_t a_rs,
              std::ptrdiff_t a_cs, const double* b, int ldb, double* c,
              int ldc);

// C[M x K] += A[M x N] * B[K x N]^T (row dot products).
void gemm_nt_acc(int m, int k, int n, const double* a, int lda,
                 const double* b, int ldb, double* c, int ldc);

// Patch extraction for a K x K convolution with stride s and zero padding
// `pad`. cols has (channels * K * K) rows of out_h * out_w entries.
void im2col(const double* in, int channels, int h, int w, int kernel,
            int stride, int pad, int out_h, int out_w, double* cols);

// Adjoint of im2col: scatter-adds cols back into `out` (which is not
// cleared).
void col2im(const double* cols, int channels, int h, int w, int kernel,
            int stride, int pad, int out_h, int out_w, double* out);

}  // namespace wecodec::kernels

#endif  // WECODEC_KERNELS_H_
