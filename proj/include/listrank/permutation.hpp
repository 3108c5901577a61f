// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "listrank/matrix.hpp"

namespace listrank {

// Reordering of m slots. map[new_position] = old_position; always a bijection.
struct Permutation {
    std::vector<int> map;

    int size() const { return static_cast<int>(map.size()); }
    bool is_identity() const;
};

// Token-id layout for a slate of m candidates: one label token per slot plus
// begin/end/pad specials. Label ids are distinct, disjoint from the specials,
// and all ids lie in [0, size).
struct Vocabulary {
    std::vector<int> label_tokens;  // label_tokens[slot] = token id
    int begin_id = -1;
    int end_id = -1;
    int pad_id = -1;
    int size = 0;

    int num_labels() const { return static_cast<int>(label_tokens.size()); }
};

Permutation identity_permutation(int m);

// Uniform over S_m, deterministic per seed. Throws on m < 1.
Permutation random_permutation(int m, std::uint64_t seed);

// inverse.map[p.map[t]] = t for all t.
Permutation invert(const Permutation& p);

// Applies q first, then p: apply(compose(p, q), x) = apply(p, apply(q, x)).
Permutation compose(const Permutation& p, const Permutation& q);

// Element at new position t is the element formerly at p.map[t].
// Throws on length mismatch.
template <typename T>
std::vector<T> apply_permutation(const Permutation& p, const std::vector<T>& items);

// Label remap of an output distribution: the mass on the label
// token for slot a is read from the source at the label token for slot
// invert(p).map[a]. Non-label columns are untouched, so each row keeps the
// same multiset of entries. Throws if a label token id falls outside
// [0, dist.cols).
Matrix remap_distribution(const Matrix& dist, const Permutation& p, const Vocabulary& vocab);

// Sum_k max(p_k, eps) * ln(max(p_k, eps) / max(q_k, eps)). Natural log.
// Throws on dimension mismatch or eps <= 0.
double kl_divergence(const std::vector<double>& p_row, const std::vector<double>& q_row,
                     double eps);

enum class KlMode {
    kForward,    // KL(original || remapped permuted)
    kSymmetric,  // Jensen-Shannon style: mean of KL(each || midpoint)
};

struct PermConsistencyLoss {
    double loss = 0.0;
    Matrix grad_logits_orig;  // d loss / d logits behind dist_orig
    Matrix grad_logits_perm;  // d loss / d logits behind dist_perm
};

// Row-wise divergence between the original distribution and the label-
// remapped permuted distribution, summed over the m label-emitting rows.
// Both inputs must be row softmaxes of their logits; gradients chain back
// through those softmaxes into both operands. Throws on shape mismatch or
// when p / vocab do not cover the row count.
PermConsistencyLoss perm_consistency_loss(const Matrix& dist_orig, const Matrix& dist_perm,
                                          const Permutation& p, const Vocabulary& vocab,
                                          KlMode mode = KlMode::kForward);

template <typename T>
std::vector<T> apply_permutation(const Permutation& p, const std::vector<T>& items) {
    if (items.size() != p.map.size()) {
        throw std::invalid_argument("apply_permutation: length mismatch");
    }
    std::vector<T> out;
    out.reserve(items.size());
    for (int t = 0; t < p.size(); ++t) out.push_back(items[static_cast<size_t>(p.map[t])]);
    return out;
}

}  // namespace listrank
