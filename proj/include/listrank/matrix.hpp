// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace listrank {

// Dense row-major matrix of doubles. The whole engine runs on 64-bit reals.
// Vectors are 1 x n or n x 1 matrices, scalars are 1 x 1.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {
        assert(r >= 0 && c >= 0);
    }
    Matrix(int r, int c, std::vector<double> v) : rows(r), cols(c), data(std::move(v)) {
        assert(data.size() == static_cast<size_t>(r) * static_cast<size_t>(c));
    }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    int size() const { return rows * cols; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    void zero() { fill(0.0); }
};

}  // namespace listrank
