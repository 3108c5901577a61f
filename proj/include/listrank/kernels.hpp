// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace listrank::kernels {

// Dispatch table of dense double-precision kernels. The scalar variants
// define the reference semantics; SIMD variants must agree within a tight
// tolerance (not bitwise: FMA contraction reassociates rounding).
//
// All matmul kernels ACCUMULATE into C; callers zero C when they want a
// plain product. Shapes:
//   matmul_nn: C[m x n] += A[m x k] * B[k x n]
//   matmul_nt: C[m x n] += A[m x k] * B[n x k]^T
//   matmul_tn: C[m x n] += A[k x m]^T * B[k x n]
struct Ops {
    const char* name;

    double (*dot)(const double* x, const double* y, int n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, int n);
    void (*add)(const double* x, const double* y, double* out, int n);
    void (*mul)(const double* x, const double* y, double* out, int n);
    void (*scale)(double a, const double* x, double* out, int n);
    double (*reduce_max)(const double* x, int n);
    double (*reduce_sum)(const double* x, int n);
    void (*matmul_nn)(const double* A, const double* B, double* C, int m, int k, int n);
    void (*matmul_nt)(const double* A, const double* B, double* C, int m, int k, int n);
    void (*matmul_tn)(const double* A, const double* B, double* C, int m, int k, int n);
    // out = softmax(x) over one row of n entries, max-shifted for stability.
    void (*softmax_row)(const double* x, double* out, int n);
    // Fused decoupled-weight-decay Adam update over one parameter block.
    // bias_c1 = 1 - beta1^t, bias_c2 = 1 - beta2^t.
    void (*adamw_update)(double* p, double* m, double* v, const double* g, int n,
                         double lr, double beta1, double beta2, double eps,
                         double weight_decay, double bias_c1, double bias_c2);
};

enum class Backend { kAuto, kScalar, kAvx2 };

// Active table. Resolved once per process: LISTRANK_KERNELS=scalar|avx2|auto
// overrides CPU detection; requesting an unsupported backend falls back to
// scalar. The choice is stable for the life of the process, so a given
// machine always runs the same code path.
const Ops& active();
const char* active_name();

const Ops& scalar_ops();
// nullptr when this build or CPU cannot run AVX2+FMA.
const Ops* avx2_ops();

// Test hook: force a backend (kAuto re-runs detection).
void force_backend(Backend b);

}  // namespace listrank::kernels
