// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "listrank/matrix.hpp"
#include "listrank/tape.hpp"
#include "listrank/template.hpp"

namespace listrank {

// Pointer-attention autoregressive ranker. Candidates are encoded from
// hashed bag-of-words features, history is pooled by attention with the
// candidate encodings as queries, and a teacher-forced decoder emits one
// distribution over the label vocabulary per output position. Label logits
// are pointer scores against the candidate encodings; the routing of the
// previous emission back into the decoder goes through the emitted
// candidate's content encoding, so the architecture itself carries no
// letter-identity shortcut.
struct ModelDims {
    int m = 10;    // slate size
    int emb = 32;  // embedding width
    // Adds a learned per-input-position embedding to each candidate
    // encoding. On by default so position bias is expressible; ablated for
    // the position-blind variant.
    bool use_position_embeddings = true;

    static constexpr int kFeatureBins = 64;
    int vocab_size() const { return m + 3; }
};

enum ParamId {
    kWFeat,     // feature bins -> candidate embedding
    kBFeat,
    kWHist,     // feature bins -> history embedding
    kBHist,
    kREmb,      // rating embedding, one row per rating 1..5
    kPosCand,   // candidate input-position embeddings
    kWCand,     // [candidate; attended user] -> candidate summary
    kBCand,
    kPosDec,    // decoder output-position embeddings
    kBeginVec,  // previous-emission stand-in at step 0
    kWDec,      // [position; previous] -> decoder state
    kBDec,
    kWSpec,     // decoder state -> begin/end/pad logits
    kBSpec,
    kNumParams,
};

const char* param_name(ParamId id);

// rows x cols of one parameter tensor under the given dims.
std::pair<int, int> param_shape(ParamId id, const ModelDims& dims);

struct ModelParams {
    ModelDims dims;
    std::array<Matrix, kNumParams> tensors;

    long long param_count() const;
};

// Weights uniform in +-1/sqrt(fan_in), embedding tables uniform in
// +-1/sqrt(emb), biases zero. Deterministic per seed. Throws on
// non-positive dims.
ModelParams init_params(std::uint64_t seed, const ModelDims& dims);

// Hashed bag-of-words: lowercased alphanumeric tokens of the title and every
// attribute, FNV-1a hashed into kFeatureBins counts, L2-normalized.
// out must hold kFeatureBins doubles.
void featurize_item(const Item& item, double* out);
Matrix featurize_slate(const CandidateSlate& slate);      // m x kFeatureBins
Matrix featurize_history(const HistorySequence& history); // k x kFeatureBins

struct ForwardResult {
    Matrix logits;  // m x V
    Matrix dist;    // row softmax of logits, off-tape
    std::unique_ptr<Tape> tape;
    NodeId logits_node = -1;
    std::array<NodeId, kNumParams> param_nodes{};
};

// Teacher-forced forward pass building the full gradient tape. The decoder
// input at step t is the content encoding of the teacher label at t - 1
// (begin vector at t = 0). teacher_labels must be a permutation of the slate
// positions; history must be non-empty with ratings in 1..5.
ForwardResult forward(const ModelParams& params, const HistorySequence& history,
                      const CandidateSlate& slate, const TargetRanking& teacher_labels);

struct SftLossResult {
    double loss = 0.0;
    NodeId node = -1;
};

// -sum_t ln dist[t][target_token_t] over the m label positions, appended to
// the result's tape so gradients flow on the next sweep.
SftLossResult sft_loss(ForwardResult& result, const TargetRanking& target);

// Autoregressive decode feeding its own emissions. Already-emitted labels
// and the special tokens are masked before each argmax, so the output is
// always a permutation. Independent of the tape path (plain kernels,
// incremental decoder), which the tests exploit as a cross-check.
TargetRanking greedy_decode(const ModelParams& params, const HistorySequence& history,
                            const CandidateSlate& slate);

// Versioned binary container: dims, seed, and every tensor with a name and
// shape manifest. Round-trips bit-exactly. Throws CheckpointError on any
// malformed or mismatching file.
void save_checkpoint(const ModelParams& params, std::uint64_t seed, const std::string& path);
ModelParams load_checkpoint(const std::string& path, std::uint64_t* seed_out = nullptr);

}  // namespace listrank
