// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Combined training objective (likelihood + soft lambda + permutation
// consistency), AdamW, the training loop, ranking evaluation, position-bias
// measurement, and the bootstrapped-decode baseline.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "listrank/data.hpp"
#include "listrank/model.hpp"
#include "listrank/permutation.hpp"

namespace listrank {

struct TrainConfig {
    double alpha = 1.0;  // weight of the soft lambda (ranking) term
    double beta = 2.0;   // weight of the permutation-consistency term
    double gamma = 2.0;  // sharpening temperature inside soft positions
    double sigma = 1.0;  // pairwise logistic scale
    double learning_rate = 5e-5;
    int batch_size = 32;
    int epochs = 10;
    int grad_accum_steps = 2;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    bool use_sll = true;  // soft lambda term on/off
    bool use_psl = true;  // permutation-consistency term on/off
    std::vector<int> ndcg_cutoffs = {3, 5, 10, 25};
    int m = 25;
    int history_len = 20;
    int emb = 32;
    bool use_position_embeddings = true;
    std::string run_id = "run";
    std::string checkpoint_path;  // best-by-validation checkpoint; empty = none
};

// Throws ConfigError on any violated invariant (negative weights,
// non-positive temperatures, non-ascending cutoffs, ...).
void validate_config(const TrainConfig& cfg);

ModelDims dims_from(const TrainConfig& cfg);

struct LossBreakdown {
    double sft = 0.0;
    double rank = 0.0;
    double perm = 0.0;
    double total = 0.0;  // sft + alpha * rank + beta * perm, by construction
};

using ParamGrads = std::array<Matrix, kNumParams>;

struct CombinedLoss {
    LossBreakdown breakdown;
    ParamGrads grads;  // d total / d tensor, parallel to ModelParams::tensors
};

// One example's objective and gradients. The ranking term reuses the original
// forward's distributions; the consistency term draws one random permutation
// from perm_seed (or uses forced_perm when given), re-runs the model on the
// permuted slate with remapped teacher labels, and compares the two
// distributions. Ablation flags skip the corresponding computation entirely.
CombinedLoss combined_loss(const ModelParams& params, const RankingExample& ex,
                           const TrainConfig& cfg, std::uint64_t perm_seed,
                           const Permutation* forced_perm = nullptr);

struct AdamState {
    std::array<Matrix, kNumParams> m1;
    std::array<Matrix, kNumParams> m2;
    long long step = 0;
};

AdamState init_adam_state(const ModelParams& params);

// Decoupled-weight-decay adaptive update with bias correction (beta1 0.9,
// beta2 0.999, eps 1e-8). A non-finite gradient aborts before any tensor is
// touched, raising DivergenceError naming the parameter group.
void optimizer_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
                    const TrainConfig& cfg);

// Running mean of per-example gradients within one optimizer step.
class GradAccumulator {
public:
    explicit GradAccumulator(const ModelParams& params);
    void add(const ParamGrads& grads);
    ParamGrads average() const;  // throws logic_error when empty
    void reset();
    int count() const { return count_; }

private:
    ParamGrads sum_;
    int count_ = 0;
};

struct EvalReport {
    std::map<int, double> ndcg_at;
    double position_bias = 0.0;
    double mean_inference_seconds = 0.0;
    int n_examples = 0;
};

using ExampleDecoder = std::function<TargetRanking(const RankingExample&)>;
using SlateDecoder = std::function<TargetRanking(const CandidateSlate&)>;

// Mean NDCG per cutoff plus mean wall-clock seconds per decode.
EvalReport evaluate_with(const ExampleDecoder& decoder,
                         const std::vector<RankingExample>& examples,
                         const std::vector<int>& cutoffs);
EvalReport evaluate(const ModelParams& params, const std::vector<RankingExample>& examples,
                    const TrainConfig& cfg);

// Mean normalized Kendall-tau distance between item-level rankings decoded
// under each pair of input permutations; 0 = fully order-invariant.
double position_bias_with(const SlateDecoder& decoder, const CandidateSlate& slate,
                          const std::vector<Permutation>& perms);
double position_bias(const ModelParams& params, const RankingExample& ex, int trials,
                     std::uint64_t seed);

// Decodes under p input permutations (the first is the identity), averages
// each item's 1-based position, and ranks by that average (ties by input
// order). p = 1 reduces to the plain greedy decode.
TargetRanking bootstrap_rank_with(const SlateDecoder& decoder, const CandidateSlate& slate,
                                  const std::vector<Permutation>& perms);
TargetRanking bootstrap_rank(const ModelParams& params, const RankingExample& ex, int p,
                             std::uint64_t seed);

struct MetricsRecord {
    std::string run_id;
    int epoch = 0;
    std::string split;  // "train" or "valid"
    std::map<int, double> ndcg_at;
    LossBreakdown loss;
    double position_bias = 0.0;
    double tpd_seconds = 0.0;  // kept 0.0 in persisted logs: wall clock would
                               // break bitwise log reproducibility
    std::string to_json() const;
};

struct TrainResult {
    ModelParams params;  // best epoch by validation NDCG at the largest cutoff
    std::vector<MetricsRecord> log;
    int best_epoch = 0;
    double best_metric = 0.0;
};

// Seeded epoch loop: shuffled batches, grad_accum_steps-way averaged
// accumulation per optimizer step, per-epoch validation, best-checkpoint
// tracking (written to cfg.checkpoint_path when set). Epoch 0 in the log is
// the untrained baseline. Non-finite losses or gradients raise
// DivergenceError; the best checkpoint written so far is left in place.
TrainResult train(const TrainConfig& cfg, const std::vector<RankingExample>& train_set,
                  const std::vector<RankingExample>& valid_set);

// Mean wall-clock seconds per greedy decode, cycling the examples until at
// least min_decodes are timed after one untimed warm-up pass.
double measure_tpd(const ModelParams& params, const std::vector<RankingExample>& examples,
                   int min_decodes = 200);

}  // namespace listrank
