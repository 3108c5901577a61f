// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernels: 4-wide double lanes with scalar remainder loops.
// exp() stays scalar libm inside softmax; the surrounding max/sum/normalize
// passes are vectorized. This TU compiles to nothing on other targets.

#include "listrank/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace listrank::kernels {
namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double v_dot(const double* x, const double* y, int n) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void v_axpy(double a, const double* x, double* y, int n) {
    const __m256d va = _mm256_set1_pd(a);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_add(const double* x, const double* y, double* out, int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void v_mul(const double* x, const double* y, double* out, int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void v_scale(double a, const double* x, double* out, int n) {
    const __m256d va = _mm256_set1_pd(a);
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = a * x[i];
}

double v_reduce_max(const double* x, int n) {
    double m = x[0];
    int i = 0;
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        double lanes[4];
        _mm256_storeu_pd(lanes, vm);
        m = lanes[0];
        for (int l = 1; l < 4; ++l) m = lanes[l] > m ? lanes[l] : m;
    }
    for (; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double v_reduce_sum(const double* x, int n) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void v_matmul_nn(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* c = C + static_cast<long>(i) * n;
        const double* a = A + static_cast<long>(i) * k;
        for (int l = 0; l < k; ++l)
            v_axpy(a[l], B + static_cast<long>(l) * n, c, n);
    }
}

void v_matmul_nt(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<long>(i) * k;
        double* c = C + static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j)
            c[j] += v_dot(a, B + static_cast<long>(j) * k, k);
    }
}

void v_matmul_tn(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int l = 0; l < k; ++l) {
        const double* a = A + static_cast<long>(l) * m;
        const double* b = B + static_cast<long>(l) * n;
        for (int i = 0; i < m; ++i)
            v_axpy(a[i], b, C + static_cast<long>(i) * n, n);
    }
}

void v_softmax_row(const double* x, double* out, int n) {
    const double mx = v_reduce_max(x, n);
    for (int i = 0; i < n; ++i) out[i] = std::exp(x[i] - mx);
    const double inv = 1.0 / v_reduce_sum(out, n);
    v_scale(inv, out, out, n);
}

void v_adamw_update(double* p, double* m, double* v, const double* g, int n,
                    double lr, double beta1, double beta2, double eps,
                    double weight_decay, double bias_c1, double bias_c2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vic1 = _mm256_set1_pd(1.0 / bias_c1);
    const __m256d vic2 = _mm256_set1_pd(1.0 / bias_c2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d vwd = _mm256_set1_pd(weight_decay);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_fmadd_pd(vb1, vm, _mm256_mul_pd(vb1c, vg));
        vv = _mm256_fmadd_pd(vb2, vv, _mm256_mul_pd(vb2c, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(vm, vic1);
        const __m256d vhat = _mm256_mul_pd(vv, vic2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d vp = _mm256_loadu_pd(p + i);
        const __m256d step =
            _mm256_add_pd(_mm256_div_pd(mhat, denom), _mm256_mul_pd(vwd, vp));
        vp = _mm256_fnmadd_pd(vlr, step, vp);
        _mm256_storeu_pd(p + i, vp);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bias_c1;
        const double vhat = v[i] / bias_c2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
    }
}

constexpr Ops kAvx2Ops = {
    "avx2",      v_dot,         v_axpy,       v_add,       v_mul,
    v_scale,     v_reduce_max,  v_reduce_sum, v_matmul_nn, v_matmul_nt,
    v_matmul_tn, v_softmax_row, v_adamw_update,
};

}  // namespace

const Ops* avx2_ops_build() { return &kAvx2Ops; }

}  // namespace listrank::kernels

#else  // !(__AVX2__ && __FMA__)

namespace listrank::kernels {
const Ops* avx2_ops_build() { return nullptr; }
}  // namespace listrank::kernels

#endif
