// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/ranking_math.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "listrank/kernels.hpp"

namespace listrank {
namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kProbFloor = 1e-9;
constexpr double kProbCeil = 1.0;

double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// 1-based positions of each item in the ranking induced by descending score;
// ties keep index order.
std::vector<int> score_positions(const std::vector<double>& scores) {
    const int m = static_cast<int>(scores.size());
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    std::vector<int> pos(m);
    for (int r = 0; r < m; ++r) pos[idx[r]] = r + 1;
    return pos;
}

}  // namespace

double gain(int rating) {
    if (rating < 0) throw std::invalid_argument("gain: negative rating");
    return std::ldexp(1.0, rating) - 1.0;
}

double discount(int pos) {
    if (pos < 1) throw std::invalid_argument("discount: position must be 1-based");
    return std::log2(static_cast<double>(pos) + 1.0);
}

double dcg_at_k(const std::vector<int>& order, const std::vector<int>& ratings, int k) {
    assert(order.size() == ratings.size());
    const int m = static_cast<int>(order.size());
    const int depth = std::min(k, m);
    double s = 0.0;
    for (int t = 0; t < depth; ++t) s += gain(ratings[order[t]]) / discount(t + 1);
    return s;
}

double ideal_dcg(const std::vector<int>& ratings, int k) {
    std::vector<int> sorted = ratings;
    std::sort(sorted.begin(), sorted.end(), std::greater<int>());
    const int depth = std::min(k, static_cast<int>(sorted.size()));
    double s = 0.0;
    for (int t = 0; t < depth; ++t) s += gain(sorted[t]) / discount(t + 1);
    return s;
}

double ndcg_at_k(const std::vector<int>& order, const std::vector<int>& ratings, int k) {
    const double ideal = ideal_dcg(ratings, k);
    if (ideal == 0.0) return 1.0;
    return dcg_at_k(order, ratings, k) / ideal;
}

double pair_delta(int pos_i, int pos_j) {
    const int d = std::abs(pos_i - pos_j);
    if (d < 1) throw std::invalid_argument("pair_delta: equal positions");
    return std::abs(1.0 / discount(d) - 1.0 / discount(d + 1));
}

LambdaLoss lambda_loss(const std::vector<double>& scores, const std::vector<int>& ratings,
                       double sigma) {
    assert(scores.size() == ratings.size());
    const int m = static_cast<int>(scores.size());
    LambdaLoss out;
    out.grad.assign(m, 0.0);
    const double ideal = ideal_dcg(ratings, m);
    if (ideal == 0.0) return out;

    const std::vector<int> pos = score_positions(scores);
    std::vector<double> norm_gain(m);
    for (int i = 0; i < m; ++i) norm_gain[i] = gain(ratings[i]) / ideal;

    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (ratings[i] <= ratings[j]) continue;  // i must outrank j; ties skip
            const double w = pair_delta(pos[i], pos[j]) * std::abs(norm_gain[i] - norm_gain[j]);
            const double d = sigma * (scores[i] - scores[j]);
            out.loss += w * softplus(-d) / kLn2;
            const double coef = -w * sigma / kLn2 * sigmoid(-d);
            out.grad[i] += coef;
            out.grad[j] -= coef;
        }
    }
    return out;
}

namespace {

struct SoftPositionsWork {
    Matrix p;        // clamped probabilities, m x V
    Matrix w;        // gamma-softmax rows over the vocabulary, m x V
    Matrix a;        // a(j, i) = w(j, label_cols[i]) * (j + 1), m x m
    Matrix q;        // smooth mode: softmax over positions of gamma * a column
    Matrix r;        // expected mode: softmax over positions of gamma * p column
    std::vector<double> s;
};

SoftPositionsWork soft_positions_work(const Matrix& dist, const std::vector<int>& label_cols,
                                      double gamma, PositionMode mode) {
    const int m = dist.rows;
    const int v = dist.cols;
    assert(static_cast<int>(label_cols.size()) == m);
    const auto& ops = kernels::active();

    SoftPositionsWork wk;
    wk.p = Matrix(m, v);
    for (int i = 0; i < dist.size(); ++i)
        wk.p.data[i] = std::clamp(dist.data[i], kProbFloor, kProbCeil);

    wk.w = Matrix(m, v);
    {
        std::vector<double> scaled(v);
        for (int j = 0; j < m; ++j) {
            ops.scale(gamma, wk.p.row(j), scaled.data(), v);
            ops.softmax_row(scaled.data(), wk.w.row(j), v);
        }
    }

    wk.a = Matrix(m, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) wk.a.at(j, i) = wk.w.at(j, label_cols[i]) * (j + 1);

    wk.s.assign(m, 0.0);
    switch (mode) {
        case PositionMode::kHardMax: {
            for (int i = 0; i < m; ++i) {
                double best = wk.a.at(0, i);
                for (int j = 1; j < m; ++j) best = std::max(best, wk.a.at(j, i));
                wk.s[i] = best;
            }
            break;
        }
        case PositionMode::kSmoothMax: {
            wk.q = Matrix(m, m);
            std::vector<double> col(m);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) col[j] = gamma * wk.a.at(j, i);
                const double mx = ops.reduce_max(col.data(), m);
                double sum = 0.0;
                for (int j = 0; j < m; ++j) sum += std::exp(col[j] - mx);
                wk.s[i] = (mx + std::log(sum)) / gamma;
                for (int j = 0; j < m; ++j) wk.q.at(j, i) = std::exp(col[j] - mx) / sum;
            }
            break;
        }
        case PositionMode::kExpected: {
            wk.r = Matrix(m, m);
            std::vector<double> col(m), sm(m);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) col[j] = gamma * wk.p.at(j, label_cols[i]);
                ops.softmax_row(col.data(), sm.data(), m);
                double e = 0.0;
                for (int j = 0; j < m; ++j) {
                    wk.r.at(j, i) = sm[j];
                    e += sm[j] * (j + 1);
                }
                wk.s[i] = e;
            }
            break;
        }
    }
    return wk;
}

}  // namespace

std::vector<double> soft_positions(const Matrix& dist, const std::vector<int>& label_cols,
                                   double gamma, PositionMode mode) {
    return soft_positions_work(dist, label_cols, gamma, mode).s;
}

SoftLambdaLoss soft_lambda_loss(const Matrix& dist, const std::vector<int>& label_cols,
                                const std::vector<int>& ratings, double gamma, double sigma,
                                PositionMode mode) {
    if (mode == PositionMode::kHardMax)
        throw std::invalid_argument("soft_lambda_loss: hard max has no gradient path");
    const int m = dist.rows;
    const int v = dist.cols;
    const auto& ops = kernels::active();

    SoftPositionsWork wk = soft_positions_work(dist, label_cols, gamma, mode);
    std::vector<double> u(m);
    for (int i = 0; i < m; ++i) u[i] = -wk.s[i];
    const LambdaLoss ll = lambda_loss(u, ratings, sigma);

    SoftLambdaLoss out;
    out.loss = ll.loss;
    std::vector<double> dls(m);  // d loss / d s_i
    for (int i = 0; i < m; ++i) dls[i] = -ll.grad[i];

    // Gradient with respect to the clamped probabilities.
    Matrix gp(m, v);
    if (mode == PositionMode::kSmoothMax) {
        // Through the smooth max and the per-row vocabulary softmax.
        Matrix t(m, v);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i)
                t.at(j, label_cols[i]) += dls[i] * wk.q.at(j, i) * (j + 1);
        for (int j = 0; j < m; ++j) {
            const double inner = ops.dot(t.row(j), wk.w.row(j), v);
            for (int k = 0; k < v; ++k)
                gp.at(j, k) = gamma * wk.w.at(j, k) * (t.at(j, k) - inner);
        }
    } else {
        // Through the per-token positional softmax expectation.
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                gp.at(j, label_cols[i]) +=
                    dls[i] * gamma * wk.r.at(j, i) * ((j + 1) - wk.s[i]);
    }

    // Clamp gate, then chain through the row softmax that produced dist.
    out.grad_logits = Matrix(m, v);
    std::vector<double> gy(v);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < v; ++k) {
            const double y = dist.at(j, k);
            gy[k] = (y >= kProbFloor && y <= kProbCeil) ? gp.at(j, k) : 0.0;
        }
        const double inner = ops.dot(gy.data(), dist.row(j), v);
        for (int k = 0; k < v; ++k)
            out.grad_logits.at(j, k) = dist.at(j, k) * (gy[k] - inner);
    }
    return out;
}

}  // namespace listrank
