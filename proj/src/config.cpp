// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/config.hpp"

#include <charconv>
#include <climits>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "listrank/errors.hpp"

namespace listrank {
namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long long to_ll(const std::string& key, const std::string& value) {
    long long out = 0;
    const char* b = value.data();
    const char* e = b + value.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || ptr != e || value.empty()) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
    }
    return out;
}

int to_int(const std::string& key, const std::string& value) {
    const long long v = to_ll(key, value);
    if (v < INT_MIN || v > INT_MAX) throw ConfigError("config key '" + key + "': out of range");
    return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* b = value.data();
    const char* e = b + value.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || ptr != e || value.empty()) {
        throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + value +
                          "'");
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    size_t pos = 0;
    while (pos <= value.size()) {
        const size_t comma = value.find(',', pos);
        const std::string part =
            trim(value.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        out.push_back(to_int(key, part));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        }
        out[key] = value;  // later lines win
    }
    return out;
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    TrainConfig& t = cfg.train;
    if (key == "alpha") {
        t.alpha = to_double(key, value);
    } else if (key == "beta") {
        t.beta = to_double(key, value);
    } else if (key == "gamma") {
        t.gamma = to_double(key, value);
    } else if (key == "sigma") {
        t.sigma = to_double(key, value);
    } else if (key == "learning_rate") {
        t.learning_rate = to_double(key, value);
    } else if (key == "batch_size") {
        t.batch_size = to_int(key, value);
    } else if (key == "epochs") {
        t.epochs = to_int(key, value);
    } else if (key == "grad_accum_steps") {
        t.grad_accum_steps = to_int(key, value);
    } else if (key == "weight_decay") {
        t.weight_decay = to_double(key, value);
    } else if (key == "seed") {
        t.seed = to_u64(key, value);
    } else if (key == "use_sll") {
        t.use_sll = to_bool(key, value);
    } else if (key == "use_psl") {
        t.use_psl = to_bool(key, value);
    } else if (key == "ndcg_cutoffs") {
        t.ndcg_cutoffs = to_int_list(key, value);
    } else if (key == "m") {
        t.m = to_int(key, value);
    } else if (key == "history_len") {
        t.history_len = to_int(key, value);
    } else if (key == "emb") {
        t.emb = to_int(key, value);
    } else if (key == "use_position_embeddings") {
        t.use_position_embeddings = to_bool(key, value);
    } else if (key == "run_id") {
        t.run_id = value;
    } else if (key == "users") {
        cfg.users = to_int(key, value);
    } else if (key == "items") {
        cfg.items = to_int(key, value);
    } else if (key == "actions_per_user") {
        cfg.actions_per_user = to_int(key, value);
    } else if (key == "rating_noise_std") {
        cfg.rating_noise_std = to_double(key, value);
    } else if (key == "workers") {
        cfg.workers = to_int(key, value);
        if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_config_map(RunConfig& cfg, const std::map<std::string, std::string>& entries) {
    for (const auto& [key, value] : entries) apply_config_entry(cfg, key, value);
}

std::string config_echo_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["record"] = "config";
    j["alpha"] = cfg.train.alpha;
    j["beta"] = cfg.train.beta;
    j["gamma"] = cfg.train.gamma;
    j["sigma"] = cfg.train.sigma;
    j["learning_rate"] = cfg.train.learning_rate;
    j["batch_size"] = cfg.train.batch_size;
    j["epochs"] = cfg.train.epochs;
    j["grad_accum_steps"] = cfg.train.grad_accum_steps;
    j["weight_decay"] = cfg.train.weight_decay;
    j["seed"] = cfg.train.seed;
    j["use_sll"] = cfg.train.use_sll;
    j["use_psl"] = cfg.train.use_psl;
    j["ndcg_cutoffs"] = cfg.train.ndcg_cutoffs;
    j["m"] = cfg.train.m;
    j["history_len"] = cfg.train.history_len;
    j["emb"] = cfg.train.emb;
    j["use_position_embeddings"] = cfg.train.use_position_embeddings;
    j["run_id"] = cfg.train.run_id;
    j["users"] = cfg.users;
    j["items"] = cfg.items;
    j["actions_per_user"] = cfg.actions_per_user;
    j["rating_noise_std"] = cfg.rating_noise_std;
    j["workers"] = cfg.workers;
    return j.dump();
}

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv("RANK_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    return to_u64("RANK_SEED", raw);
}

}  // namespace listrank
