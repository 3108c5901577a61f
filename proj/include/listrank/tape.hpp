// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "listrank/matrix.hpp"

namespace listrank {

using NodeId = int;

// Reverse-mode tape over dense double matrices. Nodes are registered in
// creation order, which is a topological order by construction, so one
// reverse pass visits every node exactly once.
//
// Gradient policy: accumulate. seed() / seed_scalar() add into a node's
// accumulator; sweep() then propagates every seed in a single reverse pass.
// A second sweep without zero_grads() throws, so a stale accumulator can
// never silently double.
class Tape {
public:
    // Leaf holding a copy of `value`; its gradient is read back after sweep.
    NodeId input(const Matrix& value);

    // C = A * B, or A * B^T when transpose_b.
    NodeId matmul(NodeId a, NodeId b, bool transpose_b = false);
    // Same-shape elementwise sum, or b as a 1 x n bias row broadcast over a.
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, double s);
    NodeId elementwise_tanh(NodeId a);
    // Each row replaced by its max-shifted softmax.
    NodeId row_softmax(NodeId a);
    // Per-row log(sum(exp(row))), max-shifted; shape rows x 1.
    NodeId log_sum_exp(NodeId a);
    // Selects table rows; repeated indices scatter-add on backward.
    NodeId embedding_gather(NodeId table, std::vector<int> rows);
    // Concatenates along columns; row counts must match.
    NodeId concat(NodeId a, NodeId b);
    // Columns [col0, col1).
    NodeId slice(NodeId a, int col0, int col1);
    NodeId sum_all(NodeId a);  // 1 x 1
    NodeId pick(NodeId a, int r, int c);  // 1 x 1
    // out[r, 0] = a[r, cols[r]].
    NodeId pick_per_row(NodeId a, std::vector<int> cols);

    const Matrix& value(NodeId id) const;
    const Matrix& grad(NodeId id) const;
    int size() const { return static_cast<int>(nodes_.size()); }

    // Adds g into the node's accumulator. Must precede sweep().
    void seed(NodeId id, const Matrix& g);
    // Seeds 1.0 at a 1 x 1 node.
    void seed_scalar(NodeId root);
    // One reverse pass propagating all seeds. Throws if already swept.
    void sweep();
    // seed_scalar(root) + sweep(). Throws unless root is 1 x 1.
    void backward(NodeId root);
    // Clears every accumulator and re-arms sweep.
    void zero_grads();

private:
    enum class Op {
        kInput,
        kMatmul,
        kAdd,
        kAddRow,
        kScale,
        kTanh,
        kRowSoftmax,
        kLogSumExp,
        kGather,
        kConcat,
        kSlice,
        kSumAll,
        kPick,
        kPickPerRow,
    };

    struct NodeRec {
        Op op;
        Matrix value;
        Matrix grad;
        NodeId a = -1;
        NodeId b = -1;
        double scalar = 0.0;
        bool transpose_b = false;
        int i0 = 0;  // slice begin / pick row
        int i1 = 0;  // slice end / pick col
        std::vector<int> indices;
    };

    NodeId push(NodeRec rec);
    const NodeRec& node(NodeId id) const;
    void propagate(const NodeRec& n);

    std::vector<NodeRec> nodes_;
    bool swept_ = false;
};

// Central-difference gradient audit: perturbs every coordinate of every
// parameter, re-evaluates f, and returns the maximum over coordinates of
// |analytic - numeric| / max(1, |numeric|). f must read the parameters
// through the given pointers. Throws on non-finite f or h outside
// [1e-6, 1e-3].
double grad_check(const std::function<double()>& f, const std::vector<Matrix*>& params,
                  const std::vector<Matrix>& analytic, double h);

}  // namespace listrank
