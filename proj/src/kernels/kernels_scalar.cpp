// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Plain loops, no reassociation tricks: these define the
// semantics the SIMD variants are tested against.

#include "listrank/kernels.hpp"

#include <cmath>

namespace listrank::kernels {
namespace {

double s_dot(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void s_axpy(double a, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_add(const double* x, const double* y, double* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void s_mul(const double* x, const double* y, double* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void s_scale(double a, const double* x, double* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = a * x[i];
}

double s_reduce_max(const double* x, int n) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double s_reduce_sum(const double* x, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i];
    return s;
}

void s_matmul_nn(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* c = C + static_cast<long>(i) * n;
        const double* a = A + static_cast<long>(i) * k;
        for (int l = 0; l < k; ++l) {
            const double al = a[l];
            const double* b = B + static_cast<long>(l) * n;
            for (int j = 0; j < n; ++j) c[j] += al * b[j];
        }
    }
}

void s_matmul_nt(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<long>(i) * k;
        double* c = C + static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* b = B + static_cast<long>(j) * k;
            double s = 0.0;
            for (int l = 0; l < k; ++l) s += a[l] * b[l];
            c[j] += s;
        }
    }
}

void s_matmul_tn(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int l = 0; l < k; ++l) {
        const double* a = A + static_cast<long>(l) * m;
        const double* b = B + static_cast<long>(l) * n;
        for (int i = 0; i < m; ++i) {
            const double ai = a[i];
            double* c = C + static_cast<long>(i) * n;
            for (int j = 0; j < n; ++j) c[j] += ai * b[j];
        }
    }
}

void s_softmax_row(const double* x, double* out, int n) {
    const double mx = s_reduce_max(x, n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(x[i] - mx);
        sum += out[i];
    }
    const double inv = 1.0 / sum;
    for (int i = 0; i < n; ++i) out[i] *= inv;
}

void s_adamw_update(double* p, double* m, double* v, const double* g, int n,
                    double lr, double beta1, double beta2, double eps,
                    double weight_decay, double bias_c1, double bias_c2) {
    for (int i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bias_c1;
        const double vhat = v[i] / bias_c2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
    }
}

constexpr Ops kScalarOps = {
    "scalar",    s_dot,         s_axpy,      s_add,       s_mul,
    s_scale,     s_reduce_max,  s_reduce_sum, s_matmul_nn, s_matmul_nt,
    s_matmul_tn, s_softmax_row, s_adamw_update,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace listrank::kernels
