// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "listrank/matrix.hpp"

namespace listrank {

// Graded-relevance gain, 2^rating - 1.
double gain(int rating);

// Positional discount log2(pos + 1); pos is 1-based.
double discount(int pos);

// DCG of `order` (order[t] = candidate index ranked t-th, 0-based) truncated
// at k; ratings are parallel to candidates.
double dcg_at_k(const std::vector<int>& order, const std::vector<int>& ratings, int k);

// Ideal DCG: ratings sorted descending, truncated at k.
double ideal_dcg(const std::vector<int>& ratings, int k);

// DCG / ideal DCG, both truncated at min(k, m). 1.0 when the ideal DCG is 0.
double ndcg_at_k(const std::vector<int>& order, const std::vector<int>& ratings, int k);

// |1/D(d) - 1/D(d+1)| where d = |pos_i - pos_j|; both positions 1-based.
double pair_delta(int pos_i, int pos_j);

struct LambdaLoss {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d score, parallel to scores
};

// Pairwise lambda loss over ordered pairs (i, j) with ratings[i] > ratings[j]:
// sum of delta_ij * |G_i - G_j| * log2(1 + exp(-sigma * (u_i - u_j))), where
// G is the gain normalized by full-slate ideal DCG and delta uses positions
// from the ranking induced by the current scores (descending, ties stable by
// index). The induced positions enter the gradient as constants. Ties in
// rating contribute no pairs.
LambdaLoss lambda_loss(const std::vector<double>& scores, const std::vector<int>& ratings,
                       double sigma);

// How per-token position scores collapse the per-position distribution:
//   kSmoothMax: log-sum-exp over positions with temperature 1/gamma
//               (differentiable surrogate used for training),
//   kHardMax:   exact max over positions (evaluation semantics),
//   kExpected:  expectation of position under a softmax over positions.
enum class PositionMode { kSmoothMax, kHardMax, kExpected };

// Differentiable position of each label token under the model distribution.
// dist is m x V with one row per output position; label_cols[i] is the vocab
// column of candidate i. Probabilities are clamped to [1e-9, 1]; each row is
// re-sharpened by a gamma-temperature softmax over the full vocabulary and
// the per-position mass is multiplied by the 1-based position before the
// positional reduction selected by `mode` (kExpected normalizes the raw
// clamped mass over positions instead).
std::vector<double> soft_positions(const Matrix& dist, const std::vector<int>& label_cols,
                                   double gamma, PositionMode mode);

struct SoftLambdaLoss {
    double loss = 0.0;
    // Gradient with respect to the logits that produced `dist` via a row
    // softmax (chain through the soft positions and that softmax).
    Matrix grad_logits;
};

// Lambda loss on u_i = -soft_position_i. `mode` must be differentiable
// (kSmoothMax or kExpected).
SoftLambdaLoss soft_lambda_loss(const Matrix& dist, const std::vector<int>& label_cols,
                                const std::vector<int>& ratings, double gamma, double sigma,
                                PositionMode mode);

}  // namespace listrank
