// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "listrank/kernels.hpp"

namespace listrank {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes (" + shape_str(a) +
                                ") and (" + shape_str(b) + ")");
}

}  // namespace

NodeId Tape::push(NodeRec rec) {
    rec.grad = Matrix(rec.value.rows, rec.value.cols);
    nodes_.push_back(std::move(rec));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

const Tape::NodeRec& Tape::node(NodeId id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("Tape: bad node id");
    return nodes_[static_cast<size_t>(id)];
}

const Matrix& Tape::value(NodeId id) const { return node(id).value; }
const Matrix& Tape::grad(NodeId id) const { return node(id).grad; }

NodeId Tape::input(const Matrix& value) {
    NodeRec rec;
    rec.op = Op::kInput;
    rec.value = value;
    return push(std::move(rec));
}

NodeId Tape::matmul(NodeId a, NodeId b, bool transpose_b) {
    const Matrix& av = node(a).value;
    const Matrix& bv = node(b).value;
    const int k = transpose_b ? bv.cols : bv.rows;
    const int n = transpose_b ? bv.rows : bv.cols;
    if (av.cols != k) shape_error("matmul", av, bv);
    NodeRec rec;
    rec.op = Op::kMatmul;
    rec.a = a;
    rec.b = b;
    rec.transpose_b = transpose_b;
    rec.value = Matrix(av.rows, n);
    const auto& ops = kernels::active();
    if (transpose_b) {
        ops.matmul_nt(av.data.data(), bv.data.data(), rec.value.data.data(), av.rows, av.cols, n);
    } else {
        ops.matmul_nn(av.data.data(), bv.data.data(), rec.value.data.data(), av.rows, av.cols, n);
    }
    return push(std::move(rec));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Matrix& av = node(a).value;
    const Matrix& bv = node(b).value;
    NodeRec rec;
    rec.a = a;
    rec.b = b;
    rec.value = Matrix(av.rows, av.cols);
    if (av.same_shape(bv)) {
        rec.op = Op::kAdd;
        kernels::active().add(av.data.data(), bv.data.data(), rec.value.data.data(),
                              static_cast<int>(av.data.size()));
    } else if (bv.rows == 1 && bv.cols == av.cols) {
        rec.op = Op::kAddRow;
        for (int r = 0; r < av.rows; ++r) {
            kernels::active().add(av.row(r), bv.row(0), rec.value.row(r), av.cols);
        }
    } else {
        shape_error("add", av, bv);
    }
    return push(std::move(rec));
}

NodeId Tape::scale(NodeId a, double s) {
    const Matrix& av = node(a).value;
    NodeRec rec;
    rec.op = Op::kScale;
    rec.a = a;
    rec.scalar = s;
    rec.value = Matrix(av.rows, av.cols);
    kernels::active().scale(s, av.data.data(), rec.value.data.data(),
                            static_cast<int>(av.data.size()));
    return push(std::move(rec));
}

NodeId Tape::elementwise_tanh(NodeId a) {
    const Matrix& av = node(a).value;
    NodeRec rec;
    rec.op = Op::kTanh;
    rec.a = a;
    rec.value = Matrix(av.rows, av.cols);
    for (size_t i = 0; i < av.data.size(); ++i) rec.value.data[i] = std::tanh(av.data[i]);
    return push(std::move(rec));
}

NodeId Tape::row_softmax(NodeId a) {
    const Matrix& av = node(a).value;
    NodeRec rec;
    rec.op = Op::kRowSoftmax;
    rec.a = a;
    rec.value = Matrix(av.rows, av.cols);
    for (int r = 0; r < av.rows; ++r) {
        kernels::active().softmax_row(av.row(r), rec.value.row(r), av.cols);
    }
    return push(std::move(rec));
}

NodeId Tape::log_sum_exp(NodeId a) {
    const Matrix& av = node(a).value;
    NodeRec rec;
    rec.op = Op::kLogSumExp;
    rec.a = a;
    rec.value = Matrix(av.rows, 1);
    for (int r = 0; r < av.rows; ++r) {
        const double mx = kernels::active().reduce_max(av.row(r), av.cols);
        double sum = 0.0;
        for (int c = 0; c < av.cols; ++c) sum += std::exp(av.at(r, c) - mx);
        rec.value.at(r, 0) = mx + std::log(sum);
    }
    return push(std::move(rec));
}

NodeId Tape::embedding_gather(NodeId table, std::vector<int> rows) {
    const Matrix& tv = node(table).value;
    for (int r : rows) {
        if (r < 0 || r >= tv.rows) {
            throw std::invalid_argument("embedding_gather: row " + std::to_string(r) +
                                        " outside table (" + shape_str(tv) + ")");
        }
    }
    NodeRec rec;
    rec.op = Op::kGather;
    rec.a = table;
    rec.value = Matrix(static_cast<int>(rows.size()), tv.cols);
    for (size_t i = 0; i < rows.size(); ++i) {
        const double* src = tv.row(rows[i]);
        double* dst = rec.value.row(static_cast<int>(i));
        for (int c = 0; c < tv.cols; ++c) dst[c] = src[c];
    }
    rec.indices = std::move(rows);
    return push(std::move(rec));
}

NodeId Tape::concat(NodeId a, NodeId b) {
    const Matrix& av = node(a).value;
    const Matrix& bv = node(b).value;
    if (av.rows != bv.rows) shape_error("concat", av, bv);
    NodeRec rec;
    rec.op = Op::kConcat;
    rec.a = a;
    rec.b = b;
    rec.i0 = av.cols;  // split point
    rec.value = Matrix(av.rows, av.cols + bv.cols);
    for (int r = 0; r < av.rows; ++r) {
        for (int c = 0; c < av.cols; ++c) rec.value.at(r, c) = av.at(r, c);
        for (int c = 0; c < bv.cols; ++c) rec.value.at(r, av.cols + c) = bv.at(r, c);
    }
    return push(std::move(rec));
}

NodeId Tape::slice(NodeId a, int col0, int col1) {
    const Matrix& av = node(a).value;
    if (col0 < 0 || col1 > av.cols || col0 >= col1) {
        throw std::invalid_argument("slice: bad column range [" + std::to_string(col0) + ", " +
                                    std::to_string(col1) + ") for (" + shape_str(av) + ")");
    }
    NodeRec rec;
    rec.op = Op::kSlice;
    rec.a = a;
    rec.i0 = col0;
    rec.i1 = col1;
    rec.value = Matrix(av.rows, col1 - col0);
    for (int r = 0; r < av.rows; ++r) {
        for (int c = col0; c < col1; ++c) rec.value.at(r, c - col0) = av.at(r, c);
    }
    return push(std::move(rec));
}

NodeId Tape::sum_all(NodeId a) {
    const Matrix& av = node(a).value;
    NodeRec rec;
    rec.op = Op::kSumAll;
    rec.a = a;
    rec.value = Matrix(1, 1);
    rec.value.at(0, 0) =
        kernels::active().reduce_sum(av.data.data(), static_cast<int>(av.data.size()));
    return push(std::move(rec));
}

NodeId Tape::pick(NodeId a, int r, int c) {
    const Matrix& av = node(a).value;
    if (r < 0 || r >= av.rows || c < 0 || c >= av.cols) {
        throw std::invalid_argument("pick: (" + std::to_string(r) + ", " + std::to_string(c) +
                                    ") outside (" + shape_str(av) + ")");
    }
    NodeRec rec;
    rec.op = Op::kPick;
    rec.a = a;
    rec.i0 = r;
    rec.i1 = c;
    rec.value = Matrix(1, 1);
    rec.value.at(0, 0) = av.at(r, c);
    return push(std::move(rec));
}

NodeId Tape::pick_per_row(NodeId a, std::vector<int> cols) {
    const Matrix& av = node(a).value;
    if (static_cast<int>(cols.size()) != av.rows) {
        throw std::invalid_argument("pick_per_row: need one column per row of (" + shape_str(av) +
                                    ")");
    }
    for (int c : cols) {
        if (c < 0 || c >= av.cols) {
            throw std::invalid_argument("pick_per_row: column " + std::to_string(c) +
                                        " outside (" + shape_str(av) + ")");
        }
    }
    NodeRec rec;
    rec.op = Op::kPickPerRow;
    rec.a = a;
    rec.value = Matrix(av.rows, 1);
    for (int r = 0; r < av.rows; ++r) {
        rec.value.at(r, 0) = av.at(r, cols[static_cast<size_t>(r)]);
    }
    rec.indices = std::move(cols);
    return push(std::move(rec));
}

void Tape::seed(NodeId id, const Matrix& g) {
    if (swept_) throw std::logic_error("Tape: seed after sweep; call zero_grads() first");
    if (id < 0 || id >= size()) throw std::out_of_range("Tape: bad node id");
    NodeRec& n = nodes_[static_cast<size_t>(id)];
    if (!n.grad.same_shape(g)) shape_error("seed", n.grad, g);
    kernels::active().axpy(1.0, g.data.data(), n.grad.data.data(),
                           static_cast<int>(g.data.size()));
}

void Tape::seed_scalar(NodeId root) {
    const NodeRec& n = node(root);
    if (n.value.rows != 1 || n.value.cols != 1) {
        throw std::invalid_argument("seed_scalar: root is (" + shape_str(n.value) +
                                    "), expected (1x1)");
    }
    Matrix one(1, 1);
    one.at(0, 0) = 1.0;
    seed(root, one);
}

void Tape::sweep() {
    if (swept_) throw std::logic_error("Tape: second sweep without zero_grads()");
    swept_ = true;
    for (int id = size() - 1; id >= 0; --id) propagate(nodes_[static_cast<size_t>(id)]);
}

void Tape::backward(NodeId root) {
    seed_scalar(root);
    sweep();
}

void Tape::zero_grads() {
    for (NodeRec& n : nodes_) n.grad.zero();
    swept_ = false;
}

void Tape::propagate(const NodeRec& n) {
    if (n.op == Op::kInput) return;
    const auto& ops = kernels::active();
    const Matrix& g = n.grad;
    Matrix& ga = nodes_[static_cast<size_t>(n.a)].grad;
    const Matrix& va = nodes_[static_cast<size_t>(n.a)].value;
    switch (n.op) {
        case Op::kInput:
            return;
        case Op::kMatmul: {
            Matrix& gb = nodes_[static_cast<size_t>(n.b)].grad;
            const Matrix& vb = nodes_[static_cast<size_t>(n.b)].value;
            if (n.transpose_b) {
                // C = A * B^T: dA += G * B; dB += G^T * A.
                ops.matmul_nn(g.data.data(), vb.data.data(), ga.data.data(), g.rows, g.cols,
                              vb.cols);
                ops.matmul_tn(g.data.data(), va.data.data(), gb.data.data(), g.cols, g.rows,
                              va.cols);
            } else {
                // C = A * B: dA += G * B^T; dB += A^T * G.
                ops.matmul_nt(g.data.data(), vb.data.data(), ga.data.data(), g.rows, g.cols,
                              vb.rows);
                ops.matmul_tn(va.data.data(), g.data.data(), gb.data.data(), va.cols, va.rows,
                              g.cols);
            }
            return;
        }
        case Op::kAdd: {
            Matrix& gb = nodes_[static_cast<size_t>(n.b)].grad;
            ops.axpy(1.0, g.data.data(), ga.data.data(), static_cast<int>(g.data.size()));
            ops.axpy(1.0, g.data.data(), gb.data.data(), static_cast<int>(g.data.size()));
            return;
        }
        case Op::kAddRow: {
            Matrix& gb = nodes_[static_cast<size_t>(n.b)].grad;
            ops.axpy(1.0, g.data.data(), ga.data.data(), static_cast<int>(g.data.size()));
            for (int r = 0; r < g.rows; ++r) ops.axpy(1.0, g.row(r), gb.row(0), g.cols);
            return;
        }
        case Op::kScale:
            ops.axpy(n.scalar, g.data.data(), ga.data.data(), static_cast<int>(g.data.size()));
            return;
        case Op::kTanh:
            for (size_t i = 0; i < g.data.size(); ++i) {
                ga.data[i] += g.data[i] * (1.0 - n.value.data[i] * n.value.data[i]);
            }
            return;
        case Op::kRowSoftmax:
            for (int r = 0; r < g.rows; ++r) {
                const double* y = n.value.row(r);
                const double* gr = g.row(r);
                const double dot = ops.dot(gr, y, g.cols);
                double* dst = ga.row(r);
                for (int c = 0; c < g.cols; ++c) dst[c] += y[c] * (gr[c] - dot);
            }
            return;
        case Op::kLogSumExp: {
            std::vector<double> soft(static_cast<size_t>(va.cols));
            for (int r = 0; r < va.rows; ++r) {
                ops.softmax_row(va.row(r), soft.data(), va.cols);
                ops.axpy(g.at(r, 0), soft.data(), ga.row(r), va.cols);
            }
            return;
        }
        case Op::kGather:
            for (size_t i = 0; i < n.indices.size(); ++i) {
                ops.axpy(1.0, g.row(static_cast<int>(i)), ga.row(n.indices[i]), g.cols);
            }
            return;
        case Op::kConcat: {
            Matrix& gb = nodes_[static_cast<size_t>(n.b)].grad;
            for (int r = 0; r < g.rows; ++r) {
                for (int c = 0; c < n.i0; ++c) ga.at(r, c) += g.at(r, c);
                for (int c = n.i0; c < g.cols; ++c) gb.at(r, c - n.i0) += g.at(r, c);
            }
            return;
        }
        case Op::kSlice:
            for (int r = 0; r < g.rows; ++r) {
                for (int c = 0; c < g.cols; ++c) ga.at(r, n.i0 + c) += g.at(r, c);
            }
            return;
        case Op::kSumAll:
            for (double& v : ga.data) v += g.at(0, 0);
            return;
        case Op::kPick:
            ga.at(n.i0, n.i1) += g.at(0, 0);
            return;
        case Op::kPickPerRow:
            for (int r = 0; r < g.rows; ++r) {
                ga.at(r, n.indices[static_cast<size_t>(r)]) += g.at(r, 0);
            }
            return;
    }
}

double grad_check(const std::function<double()>& f, const std::vector<Matrix*>& params,
                  const std::vector<Matrix>& analytic, double h) {
    if (h < 1e-6 || h > 1e-3) throw std::invalid_argument("grad_check: h outside [1e-6, 1e-3]");
    if (params.size() != analytic.size()) {
        throw std::invalid_argument("grad_check: one analytic gradient per parameter required");
    }
    if (!std::isfinite(f())) throw std::invalid_argument("grad_check: non-finite objective");
    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Matrix& p = *params[pi];
        if (!p.same_shape(analytic[pi])) {
            throw std::invalid_argument("grad_check: analytic gradient shape mismatch");
        }
        for (size_t i = 0; i < p.data.size(); ++i) {
            const double saved = p.data[i];
            p.data[i] = saved + h;
            const double up = f();
            p.data[i] = saved - h;
            const double down = f();
            p.data[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw std::invalid_argument("grad_check: non-finite objective");
            }
            const double numeric = (up - down) / (2.0 * h);
            const double err = std::abs(analytic[pi].data[i] - numeric) /
                               std::max(1.0, std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace listrank
