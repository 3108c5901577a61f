// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/permutation.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "listrank/rng.hpp"

namespace listrank {

namespace {

void check_bijection(const Permutation& p, const char* where) {
    const int m = p.size();
    std::vector<char> seen(static_cast<size_t>(m), 0);
    for (int v : p.map) {
        if (v < 0 || v >= m || seen[static_cast<size_t>(v)]) {
            throw std::invalid_argument(std::string(where) + ": map is not a bijection");
        }
        seen[static_cast<size_t>(v)] = 1;
    }
}

void check_vocab(const Vocabulary& vocab, int cols, const char* where) {
    for (int id : vocab.label_tokens) {
        if (id < 0 || id >= cols) {
            throw std::invalid_argument(std::string(where) + ": label token outside vocabulary");
        }
    }
}

}  // namespace

bool Permutation::is_identity() const {
    for (int t = 0; t < size(); ++t) {
        if (map[static_cast<size_t>(t)] != t) return false;
    }
    return true;
}

Permutation identity_permutation(int m) {
    if (m < 1) throw std::invalid_argument("identity_permutation: m must be positive");
    Permutation p;
    p.map.resize(static_cast<size_t>(m));
    std::iota(p.map.begin(), p.map.end(), 0);
    return p;
}

Permutation random_permutation(int m, std::uint64_t seed) {
    Permutation p = identity_permutation(m);
    Rng rng(seed);
    rng.shuffle(p.map);
    return p;
}

Permutation invert(const Permutation& p) {
    check_bijection(p, "invert");
    Permutation inv;
    inv.map.assign(p.map.size(), 0);
    for (int t = 0; t < p.size(); ++t) inv.map[static_cast<size_t>(p.map[static_cast<size_t>(t)])] = t;
    return inv;
}

Permutation compose(const Permutation& p, const Permutation& q) {
    if (p.size() != q.size()) throw std::invalid_argument("compose: size mismatch");
    check_bijection(p, "compose");
    check_bijection(q, "compose");
    Permutation out;
    out.map.resize(p.map.size());
    for (int t = 0; t < p.size(); ++t) {
        out.map[static_cast<size_t>(t)] =
            q.map[static_cast<size_t>(p.map[static_cast<size_t>(t)])];
    }
    return out;
}

Matrix remap_distribution(const Matrix& dist, const Permutation& p, const Vocabulary& vocab) {
    if (vocab.num_labels() != p.size()) {
        throw std::invalid_argument("remap_distribution: permutation / vocabulary size mismatch");
    }
    check_bijection(p, "remap_distribution");
    check_vocab(vocab, dist.cols, "remap_distribution");
    const Permutation inv = invert(p);
    Matrix out = dist;
    for (int a = 0; a < p.size(); ++a) {
        const int dst = vocab.label_tokens[static_cast<size_t>(a)];
        const int src = vocab.label_tokens[static_cast<size_t>(inv.map[static_cast<size_t>(a)])];
        for (int r = 0; r < dist.rows; ++r) out.at(r, dst) = dist.at(r, src);
    }
    return out;
}

double kl_divergence(const std::vector<double>& p_row, const std::vector<double>& q_row,
                     double eps) {
    if (p_row.size() != q_row.size()) {
        throw std::invalid_argument("kl_divergence: dimension mismatch");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("kl_divergence: eps must be positive");
    double sum = 0.0;
    for (size_t k = 0; k < p_row.size(); ++k) {
        const double a = std::max(p_row[k], eps);
        const double b = std::max(q_row[k], eps);
        sum += a * std::log(a / b);
    }
    return sum;
}

namespace {

constexpr double kKlEps = 1e-9;

// Forward KL of one row pair plus gradients wrt the raw probabilities.
// Entries below the clamp have zero gradient.
double kl_row_grad(const double* a, const double* b, int n, double* ga, double* gb) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double ac = std::max(a[k], kKlEps);
        const double bc = std::max(b[k], kKlEps);
        const double lr = std::log(ac / bc);
        sum += ac * lr;
        ga[k] += (a[k] >= kKlEps) ? (lr + 1.0) : 0.0;
        gb[k] += (b[k] >= kKlEps) ? (-ac / bc) : 0.0;
    }
    return sum;
}

// Jensen-Shannon style row divergence: mean of the two clamped KLs against
// the unclamped midpoint, with gradients wrt the raw probabilities.
double js_row_grad(const double* a, const double* b, int n, double* ga, double* gb) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double mid = 0.5 * (a[k] + b[k]);
        const double ac = std::max(a[k], kKlEps);
        const double bc = std::max(b[k], kKlEps);
        const double mc = std::max(mid, kKlEps);
        sum += 0.5 * (ac * std::log(ac / mc) + bc * std::log(bc / mc));
        const double mid_gate = (mid >= kKlEps) ? 1.0 : 0.0;
        const double dmid = -0.25 * mid_gate * (ac + bc) / mc;
        ga[k] += ((a[k] >= kKlEps) ? 0.5 * (std::log(ac / mc) + 1.0) : 0.0) + dmid;
        gb[k] += ((b[k] >= kKlEps) ? 0.5 * (std::log(bc / mc) + 1.0) : 0.0) + dmid;
    }
    return sum;
}

// Chains a gradient wrt softmax outputs back to the logits that produced
// them: g_logit = y * (g - <g, y>), row by row.
Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
    Matrix out(probs.rows, probs.cols);
    for (int r = 0; r < probs.rows; ++r) {
        const double* y = probs.row(r);
        const double* g = grad_probs.row(r);
        double dot = 0.0;
        for (int k = 0; k < probs.cols; ++k) dot += g[k] * y[k];
        for (int k = 0; k < probs.cols; ++k) out.at(r, k) = y[k] * (g[k] - dot);
    }
    return out;
}

}  // namespace

PermConsistencyLoss perm_consistency_loss(const Matrix& dist_orig, const Matrix& dist_perm,
                                          const Permutation& p, const Vocabulary& vocab,
                                          KlMode mode) {
    if (dist_orig.rows != dist_perm.rows || dist_orig.cols != dist_perm.cols) {
        throw std::invalid_argument("perm_consistency_loss: shape mismatch");
    }
    if (dist_orig.rows != p.size()) {
        throw std::invalid_argument("perm_consistency_loss: row count does not match permutation");
    }
    const Matrix remapped = remap_distribution(dist_perm, p, vocab);

    PermConsistencyLoss result;
    Matrix grad_orig_probs(dist_orig.rows, dist_orig.cols);
    Matrix grad_remapped(dist_orig.rows, dist_orig.cols);
    for (int t = 0; t < dist_orig.rows; ++t) {
        if (mode == KlMode::kForward) {
            result.loss += kl_row_grad(dist_orig.row(t), remapped.row(t), dist_orig.cols,
                                       grad_orig_probs.row(t), grad_remapped.row(t));
        } else {
            result.loss += js_row_grad(dist_orig.row(t), remapped.row(t), dist_orig.cols,
                                       grad_orig_probs.row(t), grad_remapped.row(t));
        }
    }

    // Undo the column remap: mass written to slot a's label column was read
    // from slot invert(p).map[a]'s column, so the gradient flows back there.
    // Each label column is read exactly once, so direct assignment suffices.
    const Permutation inv = invert(p);
    Matrix grad_perm_probs = grad_remapped;
    for (int a = 0; a < p.size(); ++a) {
        const int dst = vocab.label_tokens[static_cast<size_t>(a)];
        const int src = vocab.label_tokens[static_cast<size_t>(inv.map[static_cast<size_t>(a)])];
        for (int t = 0; t < dist_orig.rows; ++t) {
            grad_perm_probs.at(t, src) = grad_remapped.at(t, dst);
        }
    }

    result.grad_logits_orig = softmax_backward(dist_orig, grad_orig_probs);
    result.grad_logits_perm = softmax_backward(dist_perm, grad_perm_probs);
    return result;
}

}  // namespace listrank
