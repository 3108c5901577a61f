// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/model.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "listrank/errors.hpp"
#include "listrank/kernels.hpp"
#include "listrank/rng.hpp"

namespace listrank {

namespace {

constexpr int kBins = ModelDims::kFeatureBins;
constexpr int kNumSpecials = 3;
constexpr int kNumRatings = 5;

std::uint64_t fnv1a(const std::string& token) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : token) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void hash_tokens(const std::string& text, double* out) {
    std::string token;
    for (size_t i = 0; i <= text.size(); ++i) {
        const unsigned char c = i < text.size() ? static_cast<unsigned char>(text[i]) : ' ';
        if (std::isalnum(c)) {
            token += static_cast<char>(std::tolower(c));
        } else if (!token.empty()) {
            out[fnv1a(token) % kBins] += 1.0;
            token.clear();
        }
    }
}

void validate_dims(const ModelDims& dims) {
    if (dims.m < 1 || dims.m > 26 || dims.emb < 1) {
        throw std::invalid_argument("ModelDims: m must be 1..26 and emb positive");
    }
}

void validate_inputs(const ModelParams& params, const HistorySequence& history,
                     const CandidateSlate& slate) {
    if (slate.size() != params.dims.m) {
        throw std::invalid_argument("forward: slate has " + std::to_string(slate.size()) +
                                    " items, model expects " + std::to_string(params.dims.m));
    }
    if (history.entries.empty()) {
        throw std::invalid_argument("forward: empty history");
    }
    for (const HistoryEntry& e : history.entries) {
        if (e.rating < 1 || e.rating > kNumRatings) {
            throw std::invalid_argument("forward: history rating " + std::to_string(e.rating) +
                                        " outside 1..5");
        }
    }
}

void validate_teacher(const TargetRanking& teacher, int m) {
    if (static_cast<int>(teacher.size()) != m) {
        throw std::invalid_argument("forward: teacher ranking does not cover the slate");
    }
    std::vector<char> seen(static_cast<size_t>(m), 0);
    for (int t : teacher) {
        if (t < 0 || t >= m || seen[static_cast<size_t>(t)]) {
            throw std::invalid_argument("forward: teacher ranking is not a permutation");
        }
        seen[static_cast<size_t>(t)] = 1;
    }
}

// Plain-kernel helpers for the decode path (independent of the tape).
Matrix mm(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    kernels::active().matmul_nn(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols,
                                b.cols);
    return c;
}

Matrix mm_nt(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.rows);
    kernels::active().matmul_nt(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols,
                                b.rows);
    return c;
}

void add_bias_rows(Matrix& a, const Matrix& bias) {
    for (int r = 0; r < a.rows; ++r) kernels::active().add(a.row(r), bias.row(0), a.row(r), a.cols);
}

void tanh_inplace(Matrix& a) {
    for (double& v : a.data) v = std::tanh(v);
}

// Encoder shared by the incremental decoder: candidate reps, history reps,
// and candidate summaries, mirroring the tape graph.
struct Encoded {
    Matrix c;  // m x emb candidate representations
    Matrix z;  // m x emb candidate summaries
};

Encoded encode_plain(const ModelParams& p, const HistorySequence& history,
                     const CandidateSlate& slate) {
    const auto& ops = kernels::active();
    const int emb = p.dims.emb;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(emb));

    Matrix c = mm(featurize_slate(slate), p.tensors[kWFeat]);
    add_bias_rows(c, p.tensors[kBFeat]);
    tanh_inplace(c);
    if (p.dims.use_position_embeddings) {
        kernels::active().add(c.data.data(), p.tensors[kPosCand].data.data(), c.data.data(),
                              static_cast<int>(c.data.size()));
    }

    Matrix h = mm(featurize_history(history), p.tensors[kWHist]);
    for (size_t j = 0; j < history.entries.size(); ++j) {
        ops.add(h.row(static_cast<int>(j)),
                p.tensors[kREmb].row(history.entries[j].rating - 1), h.row(static_cast<int>(j)),
                emb);
    }
    add_bias_rows(h, p.tensors[kBHist]);
    tanh_inplace(h);

    Matrix att = mm_nt(c, h);
    for (double& v : att.data) v *= inv_sqrt;
    for (int r = 0; r < att.rows; ++r) ops.softmax_row(att.row(r), att.row(r), att.cols);
    const Matrix u = mm(att, h);

    Matrix cu(c.rows, 2 * emb);
    for (int r = 0; r < c.rows; ++r) {
        std::memcpy(cu.row(r), c.row(r), sizeof(double) * static_cast<size_t>(emb));
        std::memcpy(cu.row(r) + emb, u.row(r), sizeof(double) * static_cast<size_t>(emb));
    }
    Matrix z = mm(cu, p.tensors[kWCand]);
    add_bias_rows(z, p.tensors[kBCand]);
    tanh_inplace(z);

    Encoded out;
    out.c = std::move(c);
    out.z = std::move(z);
    return out;
}

}  // namespace

const char* param_name(ParamId id) {
    switch (id) {
        case kWFeat: return "w_feat";
        case kBFeat: return "b_feat";
        case kWHist: return "w_hist";
        case kBHist: return "b_hist";
        case kREmb: return "rating_emb";
        case kPosCand: return "pos_cand";
        case kWCand: return "w_cand";
        case kBCand: return "b_cand";
        case kPosDec: return "pos_dec";
        case kBeginVec: return "begin_vec";
        case kWDec: return "w_dec";
        case kBDec: return "b_dec";
        case kWSpec: return "w_spec";
        case kBSpec: return "b_spec";
        case kNumParams: break;
    }
    throw std::invalid_argument("param_name: bad id");
}

std::pair<int, int> param_shape(ParamId id, const ModelDims& dims) {
    const int e = dims.emb;
    switch (id) {
        case kWFeat: return {kBins, e};
        case kBFeat: return {1, e};
        case kWHist: return {kBins, e};
        case kBHist: return {1, e};
        case kREmb: return {kNumRatings, e};
        case kPosCand: return {dims.m, e};
        case kWCand: return {2 * e, e};
        case kBCand: return {1, e};
        case kPosDec: return {dims.m, e};
        case kBeginVec: return {1, e};
        case kWDec: return {2 * e, e};
        case kBDec: return {1, e};
        case kWSpec: return {kNumSpecials, e};
        case kBSpec: return {1, kNumSpecials};
        case kNumParams: break;
    }
    throw std::invalid_argument("param_shape: bad id");
}

long long ModelParams::param_count() const {
    long long total = 0;
    for (const Matrix& t : tensors) total += static_cast<long long>(t.data.size());
    return total;
}

ModelParams init_params(std::uint64_t seed, const ModelDims& dims) {
    validate_dims(dims);
    ModelParams p;
    p.dims = dims;
    Rng rng(seed);
    for (int i = 0; i < kNumParams; ++i) {
        const ParamId id = static_cast<ParamId>(i);
        const auto [rows, cols] = param_shape(id, dims);
        Matrix t(rows, cols);
        const bool is_bias = id == kBFeat || id == kBHist || id == kBCand || id == kBDec ||
                             id == kBSpec;
        if (!is_bias) {
            const bool is_table = id == kREmb || id == kPosCand || id == kPosDec ||
                                  id == kBeginVec;
            const double span = 1.0 / std::sqrt(static_cast<double>(is_table ? dims.emb : rows));
            for (double& v : t.data) v = (rng.uniform() * 2.0 - 1.0) * span;
        }
        p.tensors[static_cast<size_t>(i)] = std::move(t);
    }
    return p;
}

void featurize_item(const Item& item, double* out) {
    for (int i = 0; i < kBins; ++i) out[i] = 0.0;
    hash_tokens(item.title, out);
    for (const std::string& attr : item.attributes) hash_tokens(attr, out);
    double norm = 0.0;
    for (int i = 0; i < kBins; ++i) norm += out[i] * out[i];
    if (norm > 0.0) {
        const double inv = 1.0 / std::sqrt(norm);
        for (int i = 0; i < kBins; ++i) out[i] *= inv;
    }
}

Matrix featurize_slate(const CandidateSlate& slate) {
    Matrix out(slate.size(), kBins);
    for (int i = 0; i < slate.size(); ++i) {
        featurize_item(slate.items[static_cast<size_t>(i)], out.row(i));
    }
    return out;
}

Matrix featurize_history(const HistorySequence& history) {
    Matrix out(static_cast<int>(history.entries.size()), kBins);
    for (size_t j = 0; j < history.entries.size(); ++j) {
        featurize_item(history.entries[j].item, out.row(static_cast<int>(j)));
    }
    return out;
}

ForwardResult forward(const ModelParams& params, const HistorySequence& history,
                      const CandidateSlate& slate, const TargetRanking& teacher_labels) {
    validate_dims(params.dims);
    validate_inputs(params, history, slate);
    const int m = params.dims.m;
    validate_teacher(teacher_labels, m);
    const int emb = params.dims.emb;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(emb));

    ForwardResult res;
    res.tape = std::make_unique<Tape>();
    Tape& t = *res.tape;
    for (int i = 0; i < kNumParams; ++i) {
        res.param_nodes[static_cast<size_t>(i)] = t.input(params.tensors[static_cast<size_t>(i)]);
    }
    const auto pn = [&](ParamId id) { return res.param_nodes[static_cast<size_t>(id)]; };

    const NodeId phi_c = t.input(featurize_slate(slate));
    const NodeId phi_h = t.input(featurize_history(history));

    // Candidate representations.
    NodeId c = t.elementwise_tanh(t.add(t.matmul(phi_c, pn(kWFeat)), pn(kBFeat)));
    if (params.dims.use_position_embeddings) c = t.add(c, pn(kPosCand));

    // History representations carry their rating embedding.
    std::vector<int> rating_rows;
    rating_rows.reserve(history.entries.size());
    for (const HistoryEntry& e : history.entries) rating_rows.push_back(e.rating - 1);
    const NodeId h = t.elementwise_tanh(
        t.add(t.add(t.matmul(phi_h, pn(kWHist)), t.embedding_gather(pn(kREmb), rating_rows)),
              pn(kBHist)));

    // Attention pooling, candidate encodings as queries.
    const NodeId att = t.row_softmax(t.scale(t.matmul(c, h, /*transpose_b=*/true), inv_sqrt));
    const NodeId u = t.matmul(att, h);
    const NodeId z = t.elementwise_tanh(t.add(t.matmul(t.concat(c, u), pn(kWCand)), pn(kBCand)));

    // Previous-emission routing: step 0 reads the begin vector, step t reads
    // the summary of the teacher label at t - 1. Constant selector matrices
    // keep it on existing primitives.
    Matrix sel_z(m, m);
    Matrix sel_b(m, 1);
    sel_b.at(0, 0) = 1.0;
    for (int step = 1; step < m; ++step) {
        sel_z.at(step, teacher_labels[static_cast<size_t>(step - 1)]) = 1.0;
    }
    const NodeId prev =
        t.add(t.matmul(t.input(sel_z), z), t.matmul(t.input(sel_b), pn(kBeginVec)));

    const NodeId d = t.elementwise_tanh(
        t.add(t.matmul(t.concat(pn(kPosDec), prev), pn(kWDec)), pn(kBDec)));

    const NodeId pointer = t.scale(t.matmul(d, z, /*transpose_b=*/true), inv_sqrt);
    const NodeId specials = t.add(t.matmul(d, pn(kWSpec), /*transpose_b=*/true), pn(kBSpec));
    res.logits_node = t.concat(pointer, specials);

    res.logits = t.value(res.logits_node);
    res.dist = Matrix(m, params.dims.vocab_size());
    for (int r = 0; r < m; ++r) {
        kernels::active().softmax_row(res.logits.row(r), res.dist.row(r), res.logits.cols);
    }
    return res;
}

SftLossResult sft_loss(ForwardResult& result, const TargetRanking& target) {
    Tape& t = *result.tape;
    const int m = result.logits.rows;
    validate_teacher(target, m);
    // Label token id equals slate position under the stable vocabulary
    // layout, so the target tokens are the ranking itself.
    std::vector<int> cols(target.begin(), target.end());
    const NodeId lse = t.sum_all(t.log_sum_exp(result.logits_node));
    const NodeId picked = t.sum_all(t.pick_per_row(result.logits_node, cols));
    SftLossResult out;
    out.node = t.add(lse, t.scale(picked, -1.0));
    out.loss = t.value(out.node).at(0, 0);
    return out;
}

TargetRanking greedy_decode(const ModelParams& params, const HistorySequence& history,
                            const CandidateSlate& slate) {
    validate_dims(params.dims);
    validate_inputs(params, history, slate);
    const auto& ops = kernels::active();
    const int m = params.dims.m;
    const int emb = params.dims.emb;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(emb));
    const Encoded enc = encode_plain(params, history, slate);

    TargetRanking emitted;
    std::vector<char> used(static_cast<size_t>(m), 0);
    const double* prev = params.tensors[kBeginVec].row(0);
    Matrix din(1, 2 * emb);
    for (int step = 0; step < m; ++step) {
        std::memcpy(din.row(0), params.tensors[kPosDec].row(step),
                    sizeof(double) * static_cast<size_t>(emb));
        std::memcpy(din.row(0) + emb, prev, sizeof(double) * static_cast<size_t>(emb));
        Matrix d = mm(din, params.tensors[kWDec]);
        ops.add(d.row(0), params.tensors[kBDec].row(0), d.row(0), emb);
        tanh_inplace(d);

        // Pointer scores over the still-available labels; specials and
        // already-emitted labels never win.
        int best = -1;
        double best_score = 0.0;
        for (int a = 0; a < m; ++a) {
            if (used[static_cast<size_t>(a)]) continue;
            const double score = ops.dot(d.row(0), enc.z.row(a), emb) * inv_sqrt;
            if (best < 0 || score > best_score) {
                best = a;
                best_score = score;
            }
        }
        emitted.push_back(best);
        used[static_cast<size_t>(best)] = 1;
        prev = enc.z.row(best);
    }
    return emitted;
}

namespace {

void write_bytes(std::ofstream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const std::string& path) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) {
        throw CheckpointError("checkpoint truncated: " + path);
    }
}

constexpr char kMagic[4] = {'L', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const ModelParams& params, std::uint64_t seed, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw CheckpointError("cannot write checkpoint: " + path);
    write_bytes(out, kMagic, sizeof(kMagic));
    write_bytes(out, &kVersion, sizeof(kVersion));
    write_bytes(out, &seed, sizeof(seed));
    const std::int32_t m = params.dims.m;
    const std::int32_t emb = params.dims.emb;
    const std::uint8_t use_pos = params.dims.use_position_embeddings ? 1 : 0;
    write_bytes(out, &m, sizeof(m));
    write_bytes(out, &emb, sizeof(emb));
    write_bytes(out, &use_pos, sizeof(use_pos));
    const std::uint32_t n_tensors = kNumParams;
    write_bytes(out, &n_tensors, sizeof(n_tensors));
    for (int i = 0; i < kNumParams; ++i) {
        const std::string name = param_name(static_cast<ParamId>(i));
        const std::uint32_t len = static_cast<std::uint32_t>(name.size());
        write_bytes(out, &len, sizeof(len));
        write_bytes(out, name.data(), name.size());
        const Matrix& t = params.tensors[static_cast<size_t>(i)];
        const std::int32_t rows = t.rows, cols = t.cols;
        write_bytes(out, &rows, sizeof(rows));
        write_bytes(out, &cols, sizeof(cols));
        write_bytes(out, t.data.data(), t.data.size() * sizeof(double));
    }
    if (!out.good()) throw CheckpointError("short write on checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path, std::uint64_t* seed_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[4];
    read_bytes(in, magic, sizeof(magic), path);
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError("not a checkpoint file: " + path);
    }
    std::uint32_t version = 0;
    read_bytes(in, &version, sizeof(version), path);
    if (version != kVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                              ": " + path);
    }
    std::uint64_t seed = 0;
    read_bytes(in, &seed, sizeof(seed), path);
    std::int32_t m = 0, emb = 0;
    std::uint8_t use_pos = 0;
    read_bytes(in, &m, sizeof(m), path);
    read_bytes(in, &emb, sizeof(emb), path);
    read_bytes(in, &use_pos, sizeof(use_pos), path);
    ModelDims dims;
    dims.m = m;
    dims.emb = emb;
    dims.use_position_embeddings = use_pos != 0;
    if (dims.m < 1 || dims.m > 26 || dims.emb < 1) {
        throw CheckpointError("checkpoint declares bad dims: " + path);
    }
    std::uint32_t n_tensors = 0;
    read_bytes(in, &n_tensors, sizeof(n_tensors), path);
    if (n_tensors != kNumParams) {
        throw CheckpointError("checkpoint tensor count mismatch: " + path);
    }
    ModelParams params;
    params.dims = dims;
    for (int i = 0; i < kNumParams; ++i) {
        std::uint32_t len = 0;
        read_bytes(in, &len, sizeof(len), path);
        if (len > 64) throw CheckpointError("checkpoint manifest corrupt: " + path);
        std::string name(len, '\0');
        read_bytes(in, name.data(), len, path);
        if (name != param_name(static_cast<ParamId>(i))) {
            throw CheckpointError("checkpoint tensor \"" + name + "\" out of order: " + path);
        }
        std::int32_t rows = 0, cols = 0;
        read_bytes(in, &rows, sizeof(rows), path);
        read_bytes(in, &cols, sizeof(cols), path);
        const auto [want_r, want_c] = param_shape(static_cast<ParamId>(i), dims);
        if (rows != want_r || cols != want_c) {
            throw CheckpointError("checkpoint shape mismatch for \"" + name + "\": " + path);
        }
        Matrix t(rows, cols);
        read_bytes(in, t.data.data(), t.data.size() * sizeof(double), path);
        params.tensors[static_cast<size_t>(i)] = std::move(t);
    }
    if (seed_out != nullptr) *seed_out = seed;
    return params;
}

}  // namespace listrank
