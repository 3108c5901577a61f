// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "listrank/errors.hpp"
#include "listrank/kernels.hpp"
#include "listrank/ranking_math.hpp"
#include "listrank/rng.hpp"
#include "listrank/template.hpp"

namespace listrank {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Validation-time position-bias probe: a bounded sample keeps per-epoch cost
// flat while still tracking the quantity training is supposed to reduce.
constexpr int kBiasProbeExamples = 64;
constexpr int kBiasProbeTrials = 4;

void axpy_into(Matrix& dst, double a, const Matrix& src) {
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += a * src.data[i];
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<int> item_order_under(const Permutation& p, const TargetRanking& decoded) {
    std::vector<int> order(decoded.size());
    for (size_t r = 0; r < decoded.size(); ++r) {
        order[r] = p.map[static_cast<size_t>(decoded[r])];
    }
    return order;
}

CandidateSlate permute_slate(const Permutation& p, const CandidateSlate& slate) {
    CandidateSlate out;
    out.items = apply_permutation(p, slate.items);
    out.ratings = apply_permutation(p, slate.ratings);
    return out;
}

// Fraction of item pairs ranked in opposite relative order.
double kendall_distance(const std::vector<int>& order_a, const std::vector<int>& order_b) {
    const int m = static_cast<int>(order_a.size());
    if (m < 2) return 0.0;
    std::vector<int> pos_a(static_cast<size_t>(m)), pos_b(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
        pos_a[static_cast<size_t>(order_a[static_cast<size_t>(r)])] = r;
        pos_b[static_cast<size_t>(order_b[static_cast<size_t>(r)])] = r;
    }
    int discordant = 0;
    for (int x = 0; x < m; ++x) {
        for (int y = x + 1; y < m; ++y) {
            const bool a_before = pos_a[static_cast<size_t>(x)] < pos_a[static_cast<size_t>(y)];
            const bool b_before = pos_b[static_cast<size_t>(x)] < pos_b[static_cast<size_t>(y)];
            if (a_before != b_before) ++discordant;
        }
    }
    return static_cast<double>(discordant) / (0.5 * m * (m - 1));
}

MetricsRecord valid_record(const TrainConfig& cfg, int epoch, const EvalReport& report) {
    MetricsRecord rec;
    rec.run_id = cfg.run_id;
    rec.epoch = epoch;
    rec.split = "valid";
    rec.ndcg_at = report.ndcg_at;
    rec.position_bias = report.position_bias;
    return rec;
}

}  // namespace

void validate_config(const TrainConfig& cfg) {
    if (!(cfg.alpha >= 0.0) || !(cfg.beta >= 0.0)) {
        throw ConfigError("alpha and beta must be >= 0");
    }
    if (!(cfg.gamma > 0.0) || !(cfg.sigma > 0.0)) {
        throw ConfigError("gamma and sigma must be > 0");
    }
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (cfg.grad_accum_steps < 1) throw ConfigError("grad_accum_steps must be >= 1");
    if (!(cfg.weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (cfg.ndcg_cutoffs.empty()) throw ConfigError("ndcg_cutoffs must be non-empty");
    int prev = 0;
    for (int k : cfg.ndcg_cutoffs) {
        if (k <= prev) throw ConfigError("ndcg_cutoffs must be positive ascending");
        prev = k;
    }
    if (cfg.m < 1 || cfg.m > 26) throw ConfigError("m must be in [1, 26]");
    if (cfg.history_len < 1) throw ConfigError("history_len must be >= 1");
    if (cfg.emb < 1) throw ConfigError("emb must be >= 1");
}

ModelDims dims_from(const TrainConfig& cfg) {
    ModelDims dims;
    dims.m = cfg.m;
    dims.emb = cfg.emb;
    dims.use_position_embeddings = cfg.use_position_embeddings;
    return dims;
}

CombinedLoss combined_loss(const ModelParams& params, const RankingExample& ex,
                           const TrainConfig& cfg, std::uint64_t perm_seed,
                           const Permutation* forced_perm) {
    const int m = params.dims.m;
    CombinedLoss out;

    ForwardResult fr = forward(params, ex.history, ex.slate, ex.target);
    const SftLossResult sft = sft_loss(fr, ex.target);
    out.breakdown.sft = sft.loss;

    Matrix extra_seed(m, params.dims.vocab_size());
    bool have_extra = false;

    if (cfg.use_sll) {
        std::vector<int> label_cols(static_cast<size_t>(m));
        std::iota(label_cols.begin(), label_cols.end(), 0);
        const SoftLambdaLoss sll =
            soft_lambda_loss(fr.dist, label_cols, ex.slate.ratings, cfg.gamma, cfg.sigma,
                             PositionMode::kSmoothMax);
        out.breakdown.rank = sll.loss;
        if (cfg.alpha != 0.0) {
            axpy_into(extra_seed, cfg.alpha, sll.grad_logits);
            have_extra = true;
        }
    }

    ParamGrads perm_grads;
    bool have_perm_grads = false;
    if (cfg.use_psl) {
        const Permutation p =
            (forced_perm != nullptr) ? *forced_perm : random_permutation(m, perm_seed);
        const Permutation inv = invert(p);
        const CandidateSlate permuted = permute_slate(p, ex.slate);
        TargetRanking teacher_p(static_cast<size_t>(m));
        for (int t = 0; t < m; ++t) {
            teacher_p[static_cast<size_t>(t)] =
                inv.map[static_cast<size_t>(ex.target[static_cast<size_t>(t)])];
        }
        ForwardResult fr2 = forward(params, ex.history, permuted, teacher_p);
        const PermConsistencyLoss pcl =
            perm_consistency_loss(fr.dist, fr2.dist, p, label_vocab(m), KlMode::kForward);
        out.breakdown.perm = pcl.loss;
        if (cfg.beta != 0.0) {
            axpy_into(extra_seed, cfg.beta, pcl.grad_logits_orig);
            have_extra = true;
            Matrix seed2(m, params.dims.vocab_size());
            axpy_into(seed2, cfg.beta, pcl.grad_logits_perm);
            fr2.tape->seed(fr2.logits_node, seed2);
            fr2.tape->sweep();
            for (int i = 0; i < kNumParams; ++i) {
                perm_grads[static_cast<size_t>(i)] =
                    fr2.tape->grad(fr2.param_nodes[static_cast<size_t>(i)]);
            }
            have_perm_grads = true;
        }
    }

    out.breakdown.total =
        out.breakdown.sft + cfg.alpha * out.breakdown.rank + cfg.beta * out.breakdown.perm;

    fr.tape->seed_scalar(sft.node);
    if (have_extra) fr.tape->seed(fr.logits_node, extra_seed);
    fr.tape->sweep();
    for (int i = 0; i < kNumParams; ++i) {
        out.grads[static_cast<size_t>(i)] = fr.tape->grad(fr.param_nodes[static_cast<size_t>(i)]);
        if (have_perm_grads) {
            axpy_into(out.grads[static_cast<size_t>(i)], 1.0, perm_grads[static_cast<size_t>(i)]);
        }
    }
    return out;
}

AdamState init_adam_state(const ModelParams& params) {
    AdamState state;
    for (int i = 0; i < kNumParams; ++i) {
        const Matrix& t = params.tensors[static_cast<size_t>(i)];
        state.m1[static_cast<size_t>(i)] = Matrix(t.rows, t.cols);
        state.m2[static_cast<size_t>(i)] = Matrix(t.rows, t.cols);
    }
    return state;
}

void optimizer_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
                    const TrainConfig& cfg) {
    for (int i = 0; i < kNumParams; ++i) {
        const Matrix& g = grads[static_cast<size_t>(i)];
        if (!g.same_shape(params.tensors[static_cast<size_t>(i)])) {
            throw std::logic_error("gradient shape mismatch for " +
                                   std::string(param_name(static_cast<ParamId>(i))));
        }
        for (double v : g.data) {
            if (!std::isfinite(v)) {
                throw DivergenceError("non-finite gradient in parameter group " +
                                      std::string(param_name(static_cast<ParamId>(i))));
            }
        }
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    const kernels::Ops& ops = kernels::active();
    for (int i = 0; i < kNumParams; ++i) {
        Matrix& p = params.tensors[static_cast<size_t>(i)];
        ops.adamw_update(p.data.data(), state.m1[static_cast<size_t>(i)].data.data(),
                         state.m2[static_cast<size_t>(i)].data.data(),
                         grads[static_cast<size_t>(i)].data.data(),
                         static_cast<int>(p.data.size()), cfg.learning_rate, kAdamBeta1,
                         kAdamBeta2, kAdamEps, cfg.weight_decay, c1, c2);
    }
}

GradAccumulator::GradAccumulator(const ModelParams& params) {
    for (int i = 0; i < kNumParams; ++i) {
        const Matrix& t = params.tensors[static_cast<size_t>(i)];
        sum_[static_cast<size_t>(i)] = Matrix(t.rows, t.cols);
    }
}

void GradAccumulator::add(const ParamGrads& grads) {
    for (int i = 0; i < kNumParams; ++i) {
        if (!grads[static_cast<size_t>(i)].same_shape(sum_[static_cast<size_t>(i)])) {
            throw std::logic_error("accumulated gradient shape mismatch");
        }
        axpy_into(sum_[static_cast<size_t>(i)], 1.0, grads[static_cast<size_t>(i)]);
    }
    ++count_;
}

ParamGrads GradAccumulator::average() const {
    if (count_ == 0) throw std::logic_error("averaging an empty accumulator");
    ParamGrads out = sum_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (Matrix& g : out) {
        for (double& v : g.data) v *= inv;
    }
    return out;
}

void GradAccumulator::reset() {
    for (Matrix& g : sum_) g.zero();
    count_ = 0;
}

EvalReport evaluate_with(const ExampleDecoder& decoder,
                         const std::vector<RankingExample>& examples,
                         const std::vector<int>& cutoffs) {
    EvalReport report;
    for (int k : cutoffs) report.ndcg_at[k] = 0.0;
    report.n_examples = static_cast<int>(examples.size());
    if (examples.empty()) return report;

    double total_seconds = 0.0;
    for (const RankingExample& ex : examples) {
        const auto t0 = std::chrono::steady_clock::now();
        const TargetRanking decoded = decoder(ex);
        total_seconds += seconds_since(t0);
        for (int k : cutoffs) {
            report.ndcg_at[k] += ndcg_at_k(decoded, ex.slate.ratings, k);
        }
    }
    for (int k : cutoffs) report.ndcg_at[k] /= static_cast<double>(examples.size());
    report.mean_inference_seconds = total_seconds / static_cast<double>(examples.size());
    return report;
}

EvalReport evaluate(const ModelParams& params, const std::vector<RankingExample>& examples,
                    const TrainConfig& cfg) {
    return evaluate_with(
        [&params](const RankingExample& ex) {
            return greedy_decode(params, ex.history, ex.slate);
        },
        examples, cfg.ndcg_cutoffs);
}

double position_bias_with(const SlateDecoder& decoder, const CandidateSlate& slate,
                          const std::vector<Permutation>& perms) {
    if (perms.size() < 2) throw std::invalid_argument("position bias needs >= 2 trials");
    std::vector<std::vector<int>> orders;
    orders.reserve(perms.size());
    for (const Permutation& p : perms) {
        orders.push_back(item_order_under(p, decoder(permute_slate(p, slate))));
    }
    double sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < orders.size(); ++i) {
        for (size_t j = i + 1; j < orders.size(); ++j) {
            sum += kendall_distance(orders[i], orders[j]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

double position_bias(const ModelParams& params, const RankingExample& ex, int trials,
                     std::uint64_t seed) {
    if (trials < 2) throw std::invalid_argument("position bias needs >= 2 trials");
    const int m = static_cast<int>(ex.slate.items.size());
    std::vector<Permutation> perms;
    perms.reserve(static_cast<size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        perms.push_back(random_permutation(m, Rng::mix(seed, static_cast<std::uint64_t>(i))));
    }
    return position_bias_with(
        [&](const CandidateSlate& slate) { return greedy_decode(params, ex.history, slate); },
        ex.slate, perms);
}

TargetRanking bootstrap_rank_with(const SlateDecoder& decoder, const CandidateSlate& slate,
                                  const std::vector<Permutation>& perms) {
    if (perms.empty()) throw std::invalid_argument("bootstrap needs >= 1 permutation");
    const int m = static_cast<int>(slate.items.size());
    std::vector<double> avg_pos(static_cast<size_t>(m), 0.0);
    for (const Permutation& p : perms) {
        const std::vector<int> order = item_order_under(p, decoder(permute_slate(p, slate)));
        for (int r = 0; r < m; ++r) {
            avg_pos[static_cast<size_t>(order[static_cast<size_t>(r)])] +=
                static_cast<double>(r + 1);
        }
    }
    for (double& v : avg_pos) v /= static_cast<double>(perms.size());
    TargetRanking result(static_cast<size_t>(m));
    std::iota(result.begin(), result.end(), 0);
    std::stable_sort(result.begin(), result.end(), [&](int a, int b) {
        return avg_pos[static_cast<size_t>(a)] < avg_pos[static_cast<size_t>(b)];
    });
    return result;
}

TargetRanking bootstrap_rank(const ModelParams& params, const RankingExample& ex, int p,
                             std::uint64_t seed) {
    if (p < 1) throw std::invalid_argument("bootstrap needs p >= 1");
    const int m = static_cast<int>(ex.slate.items.size());
    std::vector<Permutation> perms;
    perms.reserve(static_cast<size_t>(p));
    perms.push_back(identity_permutation(m));
    for (int i = 1; i < p; ++i) {
        perms.push_back(random_permutation(m, Rng::mix(seed, static_cast<std::uint64_t>(i))));
    }
    return bootstrap_rank_with(
        [&](const CandidateSlate& slate) { return greedy_decode(params, ex.history, slate); },
        ex.slate, perms);
}

std::string MetricsRecord::to_json() const {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["epoch"] = epoch;
    j["split"] = split;
    for (const auto& [k, v] : ndcg_at) j["ndcg@" + std::to_string(k)] = v;
    j["sft"] = loss.sft;
    j["rank"] = loss.rank;
    j["perm"] = loss.perm;
    j["total"] = loss.total;
    j["position_bias"] = position_bias;
    j["tpd_seconds"] = tpd_seconds;
    return j.dump();
}

TrainResult train(const TrainConfig& cfg, const std::vector<RankingExample>& train_set,
                  const std::vector<RankingExample>& valid_set) {
    validate_config(cfg);
    if (train_set.empty() || valid_set.empty()) {
        throw DataError("training requires non-empty train and valid sets");
    }

    const ModelDims dims = dims_from(cfg);
    ModelParams params = init_params(cfg.seed, dims);
    AdamState state = init_adam_state(params);
    const int largest_cutoff = cfg.ndcg_cutoffs.back();

    const auto validate_now = [&](int epoch) {
        EvalReport report = evaluate(params, valid_set, cfg);
        const int probe = std::min<int>(kBiasProbeExamples, report.n_examples);
        double bias = 0.0;
        for (int i = 0; i < probe; ++i) {
            bias += position_bias(params, valid_set[static_cast<size_t>(i)], kBiasProbeTrials,
                                  Rng::mix(cfg.seed, 7700ULL + static_cast<std::uint64_t>(i)));
        }
        report.position_bias = (probe > 0) ? bias / probe : 0.0;
        return valid_record(cfg, epoch, report);
    };

    TrainResult result;
    MetricsRecord rec0 = validate_now(0);
    result.log.push_back(rec0);
    result.params = params;
    result.best_epoch = 0;
    result.best_metric = rec0.ndcg_at.at(largest_cutoff);
    if (!cfg.checkpoint_path.empty()) save_checkpoint(params, cfg.seed, cfg.checkpoint_path);

    const int effective_batch = cfg.batch_size * cfg.grad_accum_steps;
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0u);
    std::uint64_t visit = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(cfg.seed, 5000ULL + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        GradAccumulator acc(params);
        LossBreakdown sums;
        for (size_t idx : order) {
            const CombinedLoss cl =
                combined_loss(params, train_set[idx], cfg, Rng::mix(cfg.seed, 0xA11CEULL + visit));
            ++visit;
            if (!std::isfinite(cl.breakdown.total)) {
                throw DivergenceError("non-finite training loss at epoch " +
                                      std::to_string(epoch));
            }
            sums.sft += cl.breakdown.sft;
            sums.rank += cl.breakdown.rank;
            sums.perm += cl.breakdown.perm;
            sums.total += cl.breakdown.total;
            acc.add(cl.grads);
            if (acc.count() == effective_batch) {
                optimizer_step(params, acc.average(), state, cfg);
                acc.reset();
            }
        }
        if (acc.count() > 0) {
            optimizer_step(params, acc.average(), state, cfg);
            acc.reset();
        }

        MetricsRecord train_rec;
        train_rec.run_id = cfg.run_id;
        train_rec.epoch = epoch;
        train_rec.split = "train";
        const double n = static_cast<double>(train_set.size());
        train_rec.loss = {sums.sft / n, sums.rank / n, sums.perm / n, sums.total / n};
        result.log.push_back(train_rec);

        const MetricsRecord valid_rec = validate_now(epoch);
        result.log.push_back(valid_rec);
        const double metric = valid_rec.ndcg_at.at(largest_cutoff);
        if (metric > result.best_metric) {
            result.best_metric = metric;
            result.best_epoch = epoch;
            result.params = params;
            if (!cfg.checkpoint_path.empty()) {
                save_checkpoint(params, cfg.seed, cfg.checkpoint_path);
            }
        }
    }
    return result;
}

double measure_tpd(const ModelParams& params, const std::vector<RankingExample>& examples,
                   int min_decodes) {
    if (examples.empty()) throw std::invalid_argument("measure_tpd needs examples");
    if (min_decodes < 1) throw std::invalid_argument("min_decodes must be >= 1");
    for (const RankingExample& ex : examples) {
        greedy_decode(params, ex.history, ex.slate);  // warm-up pass, untimed
    }
    int done = 0;
    const auto t0 = std::chrono::steady_clock::now();
    while (done < min_decodes) {
        for (const RankingExample& ex : examples) {
            greedy_decode(params, ex.history, ex.slate);
            ++done;
        }
    }
    return seconds_since(t0) / static_cast<double>(done);
}

}  // namespace listrank
