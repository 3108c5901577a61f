// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synthetic data generation, training, evaluation,
// single-example ranking, and the bootstrapped-decode benchmark.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "listrank/config.hpp"
#include "listrank/data.hpp"
#include "listrank/errors.hpp"
#include "listrank/ranking_math.hpp"
#include "listrank/rng.hpp"
#include "listrank/train.hpp"

namespace {

using namespace listrank;
namespace fs = std::filesystem;

// Flags beat RANK_SEED, which beats the config file, which beats defaults.
struct ConfigLayers {
    std::string config_path;
    CLI::App* cmd = nullptr;

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty()) apply_config_map(cfg, parse_config_file(config_path));
        if (const auto env_seed = seed_from_env()) cfg.train.seed = *env_seed;
        return cfg;
    }
};

// Registers --config plus per-key override flags on a subcommand. Overrides
// are applied after resolve() so that explicit flags always win.
class FlagSet {
public:
    FlagSet(CLI::App* cmd, ConfigLayers* layers) : cmd_(cmd) {
        layers->cmd = cmd;
        cmd->add_option("--config", layers->config_path, "flat key=value config file");
    }

    void add(const std::string& flag, const std::string& key, const std::string& help) {
        values_[key] = "";
        cmd_->add_option(flag, values_[key], help);
        flags_[key] = flag;
    }

    void apply(RunConfig& cfg) const {
        for (const auto& [key, value] : values_) {
            if (cmd_->count(flags_.at(key)) > 0) apply_config_entry(cfg, key, value);
        }
    }

private:
    CLI::App* cmd_;
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> flags_;
};

void add_train_flags(FlagSet& flags) {
    flags.add("--seed", "seed", "RNG seed (beats RANK_SEED and the config file)");
    flags.add("--alpha", "alpha", "ranking term weight");
    flags.add("--beta", "beta", "consistency term weight");
    flags.add("--gamma", "gamma", "soft-position sharpening temperature");
    flags.add("--sigma", "sigma", "pairwise logistic scale");
    flags.add("--learning-rate", "learning_rate", "AdamW learning rate");
    flags.add("--batch-size", "batch_size", "examples per accumulation slice");
    flags.add("--epochs", "epochs", "training epochs");
    flags.add("--grad-accum-steps", "grad_accum_steps", "accumulation slices per step");
    flags.add("--weight-decay", "weight_decay", "decoupled weight decay");
    flags.add("--use-sll", "use_sll", "enable the soft lambda term (true/false)");
    flags.add("--use-psl", "use_psl", "enable the consistency term (true/false)");
    flags.add("--cutoffs", "ndcg_cutoffs", "comma-separated NDCG cutoffs");
    flags.add("--m", "m", "slate size");
    flags.add("--history-len", "history_len", "history length");
    flags.add("--emb", "emb", "embedding width");
    flags.add("--use-position-embeddings", "use_position_embeddings",
              "candidate position embeddings (true/false)");
    flags.add("--run-id", "run_id", "run identifier in metrics records");
    flags.add("--workers", "workers", "requested parallelism (this build runs 1)");
}

struct LoadedData {
    SyntheticDataset raw;  // interactions + catalog (raw.interactions, raw.catalog)
    ExampleSet examples;
};

LoadedData load_data_dir(const std::string& dir, int m, int history_len) {
    LoadedData out;
    out.raw.interactions = load_interactions(dir + "/interactions.dat");
    out.raw.catalog = load_items(dir + "/items.dat");
    const DatasetSplit split = split_user_sequences(out.raw.interactions, m, history_len);
    out.examples = build_examples(split, out.raw.catalog, m, history_len);
    return out;
}

const std::vector<RankingExample>& pick_split(const ExampleSet& ex, const std::string& split) {
    if (split == "train") return ex.train;
    if (split == "valid") return ex.valid;
    if (split == "test") return ex.test;
    throw ConfigError("unknown split '" + split + "' (expected train, valid, or test)");
}

void warn_workers(const RunConfig& cfg) {
    if (cfg.workers > 1) {
        std::cerr << "note: --workers " << cfg.workers
                  << " requested; this build executes single-threaded\n";
    }
}

int run_gen_data(const ConfigLayers& layers, const FlagSet& flags, const std::string& out_dir) {
    RunConfig cfg = layers.resolve();
    flags.apply(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());

    SyntheticConfig scfg;
    scfg.actions_per_user = cfg.actions_per_user;
    scfg.rating_noise_std = cfg.rating_noise_std;
    SyntheticDataset data;
    try {
        data = generate_synthetic(cfg.users, cfg.items, scfg, cfg.train.seed);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    write_interactions(out_dir + "/interactions.dat", data.interactions);
    write_items(out_dir + "/items.dat", data.catalog);

    nlohmann::json manifest;
    manifest["seed"] = cfg.train.seed;
    manifest["users"] = cfg.users;
    manifest["items"] = cfg.items;
    manifest["actions_per_user"] = cfg.actions_per_user;
    manifest["rating_noise_std"] = cfg.rating_noise_std;
    std::ofstream mf(out_dir + "/manifest.json");
    if (!mf) throw DataError("cannot write " + out_dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";

    nlohmann::json line;
    line["record"] = "gen-data";
    line["out"] = out_dir;
    line["interactions"] = data.interactions.size();
    line["items"] = data.catalog.size();
    std::cout << line.dump() << "\n";
    return kExitOk;
}

int run_train(const ConfigLayers& layers, const FlagSet& flags, const std::string& data_dir,
              const std::string& out_dir) {
    RunConfig cfg = layers.resolve();
    flags.apply(cfg);
    warn_workers(cfg);
    validate_config(cfg.train);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());

    const LoadedData data = load_data_dir(data_dir, cfg.train.m, cfg.train.history_len);
    cfg.train.checkpoint_path = out_dir + "/checkpoint.bin";

    std::ofstream metrics(out_dir + "/metrics.jsonl");
    if (!metrics) throw DataError("cannot write " + out_dir + "/metrics.jsonl");
    const auto emit = [&metrics](const std::string& line) {
        std::cout << line << "\n";
        metrics << line << "\n";
    };
    emit(config_echo_json(cfg));

    const TrainResult result = train(cfg.train, data.examples.train, data.examples.valid);
    for (const MetricsRecord& rec : result.log) emit(rec.to_json());

    nlohmann::json summary;
    summary["record"] = "summary";
    summary["run_id"] = cfg.train.run_id;
    summary["best_epoch"] = result.best_epoch;
    summary["best_metric"] = result.best_metric;
    summary["train_examples"] = data.examples.train.size();
    summary["valid_examples"] = data.examples.valid.size();
    emit(summary.dump());
    return kExitOk;
}

int run_eval(const ConfigLayers& layers, const FlagSet& flags, const std::string& checkpoint,
             const std::string& data_dir, const std::string& split, int bias_trials,
             int bias_examples, bool timing) {
    RunConfig cfg = layers.resolve();
    flags.apply(cfg);
    warn_workers(cfg);

    const ModelParams params = load_checkpoint(checkpoint);
    const LoadedData data = load_data_dir(data_dir, params.dims.m, cfg.train.history_len);
    const std::vector<RankingExample>& examples = pick_split(data.examples, split);
    if (examples.empty()) throw DataError("split '" + split + "' has no examples");

    EvalReport report = evaluate(params, examples, cfg.train);
    const int probe = std::min<int>(bias_examples, report.n_examples);
    double bias = 0.0;
    for (int i = 0; i < probe; ++i) {
        bias += position_bias(params, examples[static_cast<size_t>(i)], bias_trials,
                              Rng::mix(cfg.train.seed, 7700ULL + static_cast<std::uint64_t>(i)));
    }
    report.position_bias = (probe > 0) ? bias / probe : 0.0;

    nlohmann::json j;
    j["record"] = "eval";
    j["split"] = split;
    j["n_examples"] = report.n_examples;
    for (const auto& [k, v] : report.ndcg_at) j["ndcg@" + std::to_string(k)] = v;
    j["position_bias"] = report.position_bias;
    // Wall clock is excluded from the byte-reproducibility guarantee, so it
    // is only emitted on request.
    j["tpd_seconds"] = timing ? report.mean_inference_seconds : 0.0;
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int run_rank(const std::string& checkpoint, const std::string& items_path,
             const std::string& example_path, int index) {
    const ModelParams params = load_checkpoint(checkpoint);
    const ItemCatalog catalog = load_items(items_path);
    const std::vector<RankingExample> examples = read_examples_jsonl(example_path, catalog);
    if (examples.empty()) throw DataError("no examples in " + example_path);
    if (index < 0 || static_cast<size_t>(index) >= examples.size()) {
        throw DataError("example index " + std::to_string(index) + " out of range (file has " +
                        std::to_string(examples.size()) + ")");
    }
    const RankingExample& ex = examples[static_cast<size_t>(index)];
    const TargetRanking decoded = greedy_decode(params, ex.history, ex.slate);
    std::cout << render_target(decoded, ex.slate) << "\n";
    return kExitOk;
}

int run_bench(const ConfigLayers& layers, const FlagSet& flags, const std::string& checkpoint,
              const std::string& data_dir, const std::string& split,
              const std::vector<int>& p_values, int min_calls) {
    RunConfig cfg = layers.resolve();
    flags.apply(cfg);
    warn_workers(cfg);
    if (p_values.empty()) throw ConfigError("--p needs at least one value");
    for (int p : p_values) {
        if (p < 1) throw ConfigError("--p values must be >= 1");
    }
    if (min_calls < 1) throw ConfigError("--min-calls must be >= 1");

    const ModelParams params = load_checkpoint(checkpoint);
    const LoadedData data = load_data_dir(data_dir, params.dims.m, cfg.train.history_len);
    const std::vector<RankingExample>& examples = pick_split(data.examples, split);
    if (examples.empty()) throw DataError("split '" + split + "' has no examples");

    for (int p : p_values) {
        std::map<int, double> ndcg;
        for (int k : cfg.train.ndcg_cutoffs) ndcg[k] = 0.0;
        for (size_t i = 0; i < examples.size(); ++i) {
            const TargetRanking ranked = bootstrap_rank(
                params, examples[i], p, Rng::mix(cfg.train.seed, static_cast<std::uint64_t>(i)));
            for (int k : cfg.train.ndcg_cutoffs) {
                ndcg[k] += ndcg_at_k(ranked, examples[i].slate.ratings, k);
            }
        }
        for (int k : cfg.train.ndcg_cutoffs) ndcg[k] /= static_cast<double>(examples.size());

        // Warm-up, then wall-clock over at least min_calls bootstrap calls.
        for (size_t i = 0; i < std::min<size_t>(examples.size(), 8); ++i) {
            bootstrap_rank(params, examples[i], p, Rng::mix(cfg.train.seed, i));
        }
        int calls = 0;
        const auto t0 = std::chrono::steady_clock::now();
        while (calls < min_calls) {
            for (size_t i = 0; i < examples.size() && calls < min_calls; ++i) {
                bootstrap_rank(params, examples[i], p,
                               Rng::mix(cfg.train.seed, static_cast<std::uint64_t>(i)));
                ++calls;
            }
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
            static_cast<double>(calls);

        nlohmann::json j;
        j["record"] = "bench-bootstrap";
        j["p"] = p;
        j["split"] = split;
        j["n_examples"] = examples.size();
        for (const auto& [k, v] : ndcg) j["ndcg@" + std::to_string(k)] = v;
        j["seconds_per_example"] = seconds;
        std::cout << j.dump() << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"listwise preference ranker: data, training, evaluation, benchmarks"};
    app.require_subcommand(1);

    // gen-data
    ConfigLayers gen_layers;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
    FlagSet gen_flags(gen, &gen_layers);
    gen_flags.add("--seed", "seed", "corpus seed");
    gen_flags.add("--users", "users", "number of users");
    gen_flags.add("--items", "items", "catalog size");
    gen_flags.add("--actions", "actions_per_user", "interactions per user");
    gen_flags.add("--noise", "rating_noise_std", "rating noise standard deviation");
    std::string gen_out = "data";
    gen->add_option("--out", gen_out, "output directory");

    // train
    ConfigLayers train_layers;
    CLI::App* tr = app.add_subcommand("train", "train a ranker");
    FlagSet train_flags(tr, &train_layers);
    add_train_flags(train_flags);
    std::string train_data = "data";
    std::string train_out = "out";
    tr->add_option("--data", train_data, "data directory (interactions.dat, items.dat)");
    tr->add_option("--out", train_out, "output directory (checkpoint.bin, metrics.jsonl)");

    // eval
    ConfigLayers eval_layers;
    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    FlagSet eval_flags(ev, &eval_layers);
    eval_flags.add("--seed", "seed", "seed for the bias probe permutations");
    eval_flags.add("--history-len", "history_len", "history length");
    eval_flags.add("--cutoffs", "ndcg_cutoffs", "comma-separated NDCG cutoffs");
    eval_flags.add("--workers", "workers", "requested parallelism (this build runs 1)");
    std::string eval_ckpt, eval_data = "data", eval_split = "test";
    int bias_trials = 4, bias_examples = 64;
    bool eval_timing = false;
    ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    ev->add_option("--data", eval_data, "data directory");
    ev->add_option("--split", eval_split, "train, valid, or test");
    ev->add_option("--bias-trials", bias_trials, "permutations per bias probe");
    ev->add_option("--bias-examples", bias_examples, "examples in the bias probe");
    ev->add_flag("--timing", eval_timing, "emit measured wall-clock per decode");

    // rank
    CLI::App* rk = app.add_subcommand("rank", "rank one example from a file");
    std::string rank_ckpt, rank_items, rank_example;
    int rank_index = 0;
    rk->add_option("--checkpoint", rank_ckpt, "checkpoint file")->required();
    rk->add_option("--items", rank_items, "item catalog file")->required();
    rk->add_option("--example", rank_example, "line-delimited example file")->required();
    rk->add_option("--index", rank_index, "example index within the file");

    // bench-bootstrap
    ConfigLayers bench_layers;
    CLI::App* bb = app.add_subcommand("bench-bootstrap", "bootstrapped-decode benchmark");
    FlagSet bench_flags(bb, &bench_layers);
    bench_flags.add("--seed", "seed", "bootstrap permutation seed");
    bench_flags.add("--history-len", "history_len", "history length");
    bench_flags.add("--cutoffs", "ndcg_cutoffs", "comma-separated NDCG cutoffs");
    std::string bench_ckpt, bench_data = "data", bench_split = "test";
    std::vector<int> bench_p = {1};
    int bench_min_calls = 200;
    bb->add_option("--checkpoint", bench_ckpt, "checkpoint file")->required();
    bb->add_option("--data", bench_data, "data directory");
    bb->add_option("--split", bench_split, "train, valid, or test");
    bb->add_option("--p", bench_p, "permutation counts, e.g. --p 1 3 5")->delimiter(',');
    bb->add_option("--min-calls", bench_min_calls, "timed bootstrap calls per p");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_layers, gen_flags, gen_out);
        if (tr->parsed()) return run_train(train_layers, train_flags, train_data, train_out);
        if (ev->parsed()) {
            return run_eval(eval_layers, eval_flags, eval_ckpt, eval_data, eval_split,
                            bias_trials, bias_examples, eval_timing);
        }
        if (rk->parsed()) return run_rank(rank_ckpt, rank_items, rank_example, rank_index);
        if (bb->parsed()) {
            return run_bench(bench_layers, bench_flags, bench_ckpt, bench_data, bench_split,
                             bench_p, bench_min_calls);
        }
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
