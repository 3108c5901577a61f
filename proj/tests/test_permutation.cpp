// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "listrank/matrix.hpp"
#include "listrank/permutation.hpp"
#include "listrank/rng.hpp"
#include "test_util.hpp"

using namespace listrank;

namespace {

Vocabulary contiguous_vocab(int m) {
    Vocabulary v;
    v.label_tokens.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) v.label_tokens[static_cast<size_t>(i)] = i;
    v.begin_id = m;
    v.end_id = m + 1;
    v.pad_id = m + 2;
    v.size = m + 3;
    return v;
}

// Independent row softmax, max-shifted, used as the forward map in
// finite-difference checks.
Matrix probs_from_logits(const Matrix& logits) {
    Matrix out(logits.rows, logits.cols);
    for (int r = 0; r < logits.rows; ++r) {
        double mx = logits.at(r, 0);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) {
            out.at(r, c) = std::exp(logits.at(r, c) - mx);
            sum += out.at(r, c);
        }
        for (int c = 0; c < logits.cols; ++c) out.at(r, c) /= sum;
    }
    return out;
}

Matrix random_softmax(int rows, int cols, Rng& rng) {
    Matrix logits(rows, cols);
    for (double& v : logits.data) v = rng.normal() * 1.5;
    return probs_from_logits(logits);
}

}  // namespace

TEST_CASE("random_permutation is deterministic and rejects m = 0") {
    CHECK_THROWS(random_permutation(0, 7));

    const Permutation one = random_permutation(1, 12345);
    CHECK(one.size() == 1);
    CHECK(one.is_identity());

    const Permutation a = random_permutation(5, 99);
    const Permutation b = random_permutation(5, 99);
    CHECK(a.map == b.map);

    std::vector<char> seen(5, 0);
    for (int v : a.map) {
        REQUIRE(v >= 0);
        REQUIRE(v < 5);
        CHECK(!seen[static_cast<size_t>(v)]);
        seen[static_cast<size_t>(v)] = 1;
    }
}

TEST_CASE("random_permutation draws all of S_3 uniformly") {
    const int kDraws = 60000;
    std::array<int, 27> counts{};
    for (int i = 0; i < kDraws; ++i) {
        const Permutation p = random_permutation(3, Rng::mix(4242, static_cast<std::uint64_t>(i)));
        const int code = p.map[0] * 9 + p.map[1] * 3 + p.map[2];
        ++counts[static_cast<size_t>(code)];
    }
    const std::array<int, 6> valid = {0 * 9 + 1 * 3 + 2, 0 * 9 + 2 * 3 + 1, 1 * 9 + 0 * 3 + 2,
                                      1 * 9 + 2 * 3 + 0, 2 * 9 + 0 * 3 + 1, 2 * 9 + 1 * 3 + 0};
    int total = 0;
    for (int code : valid) {
        const double freq = static_cast<double>(counts[static_cast<size_t>(code)]) / kDraws;
        CHECK(std::abs(freq - 1.0 / 6.0) < 0.01);
        total += counts[static_cast<size_t>(code)];
    }
    CHECK(total == kDraws);
}

TEST_CASE("apply_permutation moves items and preserves the multiset") {
    const std::vector<std::string> slate = {"Starman", "Jumanji", "Contact"};

    const Permutation id = identity_permutation(3);
    CHECK(apply_permutation(id, slate) == slate);

    Permutation swap01;
    swap01.map = {1, 0, 2};
    const auto swapped = apply_permutation(swap01, slate);
    CHECK(swapped == std::vector<std::string>{"Jumanji", "Starman", "Contact"});

    // Ratings travel with their items under any permutation.
    const std::vector<int> ratings = {5, 3, 4};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Permutation p = random_permutation(3, seed);
        const auto items2 = apply_permutation(p, slate);
        const auto ratings2 = apply_permutation(p, ratings);
        std::vector<std::pair<std::string, int>> pairs, pairs2;
        for (int i = 0; i < 3; ++i) {
            pairs.emplace_back(slate[static_cast<size_t>(i)], ratings[static_cast<size_t>(i)]);
            pairs2.emplace_back(items2[static_cast<size_t>(i)], ratings2[static_cast<size_t>(i)]);
        }
        std::sort(pairs.begin(), pairs.end());
        std::sort(pairs2.begin(), pairs2.end());
        CHECK(pairs == pairs2);
        CHECK(apply_permutation(invert(p), items2) == slate);
    }

    CHECK_THROWS(apply_permutation(swap01, std::vector<std::string>{"too", "short"}));
}

TEST_CASE("compose and invert obey the group laws") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const int m = 2 + static_cast<int>(seed % 5);
        const Permutation p = random_permutation(m, Rng::mix(1, seed));
        const Permutation q = random_permutation(m, Rng::mix(2, seed));
        CHECK(compose(p, invert(p)).is_identity());
        CHECK(compose(invert(p), p).is_identity());

        std::vector<int> x(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) x[static_cast<size_t>(i)] = 100 + i;
        CHECK(apply_permutation(compose(p, q), x) ==
              apply_permutation(p, apply_permutation(q, x)));
    }

    Permutation bad;
    bad.map = {0, 0, 2};
    CHECK_THROWS(invert(bad));
}

TEST_CASE("remap_distribution swaps label columns as specified") {
    // m = 2 slate, one extra non-label column. Swap permutation moves the
    // label mass while the non-label column stays put.
    Vocabulary vocab = contiguous_vocab(2);
    vocab.size = 3;
    vocab.begin_id = 2;
    vocab.end_id = 2;
    vocab.pad_id = 2;
    Matrix dist(1, 3);
    dist.at(0, 0) = 0.7;
    dist.at(0, 1) = 0.2;
    dist.at(0, 2) = 0.1;

    Permutation swap01;
    swap01.map = {1, 0};
    const Matrix out = remap_distribution(dist, swap01, vocab);
    CHECK(out.at(0, 0) == 0.2);
    CHECK(out.at(0, 1) == 0.7);
    CHECK(out.at(0, 2) == 0.1);

    const Matrix back = remap_distribution(out, invert(swap01), vocab);
    for (size_t i = 0; i < dist.data.size(); ++i) CHECK(back.data[i] == dist.data[i]);

    const Matrix same = remap_distribution(dist, identity_permutation(2), vocab);
    for (size_t i = 0; i < dist.data.size(); ++i) CHECK(same.data[i] == dist.data[i]);
}

TEST_CASE("remap_distribution handles a 3-cycle over non-contiguous label columns") {
    // Labels live at columns 1, 3, 4 of a 6-wide vocabulary.
    Vocabulary vocab;
    vocab.label_tokens = {1, 3, 4};
    vocab.begin_id = 0;
    vocab.end_id = 2;
    vocab.pad_id = 5;
    vocab.size = 6;

    Permutation cyc;
    cyc.map = {2, 0, 1};  // new slot 0 holds old item 2, etc.
    const Permutation inv = invert(cyc);
    REQUIRE(inv.map == std::vector<int>{1, 2, 0});

    Matrix dist(2, 6);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 6; ++c) dist.at(r, c) = 10.0 * r + c;
    }
    const Matrix out = remap_distribution(dist, cyc, vocab);
    for (int r = 0; r < 2; ++r) {
        // Slot 0's label column reads from slot inv.map[0] = 1, and so on.
        CHECK(out.at(r, 1) == dist.at(r, 3));
        CHECK(out.at(r, 3) == dist.at(r, 4));
        CHECK(out.at(r, 4) == dist.at(r, 1));
        CHECK(out.at(r, 0) == dist.at(r, 0));
        CHECK(out.at(r, 2) == dist.at(r, 2));
        CHECK(out.at(r, 5) == dist.at(r, 5));
    }

    // Each row keeps exactly the same multiset of entries.
    for (int r = 0; r < 2; ++r) {
        std::vector<double> a(dist.row(r), dist.row(r) + 6);
        std::vector<double> b(out.row(r), out.row(r) + 6);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }

    Vocabulary overflow = vocab;
    overflow.label_tokens = {1, 3, 6};  // column 6 is out of range
    CHECK_THROWS(remap_distribution(dist, cyc, overflow));
}

TEST_CASE("kl_divergence matches hand-computed values") {
    const std::vector<double> p = {0.5, 0.5};
    const std::vector<double> q = {0.25, 0.75};

    CHECK(kl_divergence(p, p, 1e-9) == 0.0);
    CHECK(kl_divergence(q, q, 1e-9) == 0.0);

    const double forward = kl_divergence(p, q, 1e-9);
    const double reverse = kl_divergence(q, p, 1e-9);
    CHECK(forward == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0))
                         .epsilon(1e-12));
    CHECK(std::abs(forward - 0.14384) < 1e-4);
    CHECK(reverse == doctest::Approx(0.25 * std::log(0.5) + 0.75 * std::log(1.5)).epsilon(1e-12));
    CHECK(std::abs(reverse - 0.13081) < 1e-4);
    CHECK(forward != reverse);

    // Zero mass is clamped, not singular.
    const double clamped = kl_divergence({1.0, 0.0}, {0.5, 0.5}, 1e-9);
    CHECK(std::isfinite(clamped));
    CHECK(clamped > 0.0);

    CHECK_THROWS(kl_divergence(p, {0.2, 0.3, 0.5}, 1e-9));
    CHECK_THROWS(kl_divergence(p, q, 0.0));
}

TEST_CASE("perm_consistency_loss vanishes for equivariant pairs") {
    Rng rng(777);
    for (int trial = 0; trial < 40; ++trial) {
        const int m = 2 + trial % 5;  // up to 6 slots
        const Vocabulary vocab = contiguous_vocab(m);
        const Permutation p = random_permutation(m, Rng::mix(55, static_cast<std::uint64_t>(trial)));
        const Matrix dist = random_softmax(m, vocab.size, rng);

        // A perfectly equivariant model emits under permuted inputs exactly
        // the label-remapped original distribution.
        const Matrix dist_perm = remap_distribution(dist, invert(p), vocab);
        const auto res = perm_consistency_loss(dist, dist_perm, p, vocab);
        CHECK(std::abs(res.loss) < 1e-12);
        for (double g : res.grad_logits_orig.data) CHECK(std::abs(g) < 1e-9);

        // Loss stays essentially non-negative for arbitrary pairs.
        const Matrix other = random_softmax(m, vocab.size, rng);
        CHECK(perm_consistency_loss(dist, other, p, vocab).loss > -1e-6);
    }

    const Vocabulary vocab = contiguous_vocab(3);
    Rng rng2(5);
    const Matrix dist = random_softmax(3, vocab.size, rng2);
    CHECK(perm_consistency_loss(dist, dist, identity_permutation(3), vocab).loss ==
          doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("perm_consistency_loss gradients match finite differences") {
    Rng rng(31337);
    for (KlMode mode : {KlMode::kForward, KlMode::kSymmetric}) {
        for (int trial = 0; trial < 6; ++trial) {
            const int m = 4, v = 8;
            Vocabulary vocab;
            vocab.label_tokens = {1, 3, 4, 6};
            vocab.begin_id = 0;
            vocab.end_id = 2;
            vocab.pad_id = 7;
            vocab.size = v;
            const Permutation p =
                random_permutation(m, Rng::mix(9, static_cast<std::uint64_t>(trial)));

            Matrix logits_a(m, v), logits_b(m, v);
            for (double& x : logits_a.data) x = rng.normal();
            for (double& x : logits_b.data) x = rng.normal();

            const auto res = perm_consistency_loss(probs_from_logits(logits_a),
                                                   probs_from_logits(logits_b), p, vocab, mode);

            const auto loss_at = [&](const Matrix& la, const Matrix& lb) {
                return perm_consistency_loss(probs_from_logits(la), probs_from_logits(lb), p,
                                             vocab, mode)
                    .loss;
            };
            std::vector<double> fd_a(logits_a.data.size()), fd_b(logits_b.data.size());
            for (size_t i = 0; i < logits_a.data.size(); ++i) {
                Matrix la = logits_a;
                la.data[i] = logits_a.data[i] + 1e-5;
                const double up = loss_at(la, logits_b);
                la.data[i] = logits_a.data[i] - 1e-5;
                const double dn = loss_at(la, logits_b);
                fd_a[i] = (up - dn) / 2e-5;
            }
            for (size_t i = 0; i < logits_b.data.size(); ++i) {
                Matrix lb = logits_b;
                lb.data[i] = logits_b.data[i] + 1e-5;
                const double up = loss_at(logits_a, lb);
                lb.data[i] = logits_b.data[i] - 1e-5;
                const double dn = loss_at(logits_a, lb);
                fd_b[i] = (up - dn) / 2e-5;
            }
            CHECK(testutil::max_rel_err(res.grad_logits_orig.data, fd_a) < 1e-6);
            CHECK(testutil::max_rel_err(res.grad_logits_perm.data, fd_b) < 1e-6);
        }
    }
}

TEST_CASE("perm_consistency_loss ignores how special tokens are laid out") {
    // Swapping the contents of two non-label columns in both operands leaves
    // the loss unchanged: the pairing of entries is what matters.
    const int m = 4, v = 8;
    Vocabulary vocab;
    vocab.label_tokens = {1, 3, 4, 6};
    vocab.begin_id = 0;
    vocab.end_id = 2;
    vocab.pad_id = 7;
    vocab.size = v;
    Rng rng(2024);
    const Permutation p = random_permutation(m, 606);
    const Matrix a = random_softmax(m, v, rng);
    const Matrix b = random_softmax(m, v, rng);
    const double base = perm_consistency_loss(a, b, p, vocab).loss;

    Matrix a2 = a, b2 = b;
    for (int r = 0; r < m; ++r) {
        std::swap(a2.at(r, 0), a2.at(r, 5));
        std::swap(b2.at(r, 0), b2.at(r, 5));
    }
    Vocabulary vocab2 = vocab;  // same label columns, specials relabeled
    vocab2.begin_id = 5;
    const double moved = perm_consistency_loss(a2, b2, p, vocab2).loss;
    CHECK(moved == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("perm_consistency_loss validates shapes") {
    const Vocabulary vocab = contiguous_vocab(3);
    Rng rng(1);
    const Matrix a = random_softmax(3, vocab.size, rng);
    const Matrix b4 = random_softmax(4, vocab.size, rng);
    const Matrix narrow = random_softmax(3, vocab.size - 1, rng);
    const Permutation p = random_permutation(3, 2);
    CHECK_THROWS(perm_consistency_loss(a, b4, p, vocab));
    CHECK_THROWS(perm_consistency_loss(a, narrow, p, vocab));
    CHECK_THROWS(perm_consistency_loss(b4, b4, p, vocab));
}
