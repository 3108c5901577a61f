// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration. Precedence: command-line flag, then the
// RANK_SEED environment variable (seed only), then the config file, then the
// built-in default.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "listrank/train.hpp"

namespace listrank {

struct RunConfig {
    TrainConfig train;
    // Synthetic-corpus knobs (gen-data).
    int users = 100;
    int items = 400;
    int actions_per_user = 40;
    double rating_noise_std = 0.3;
    // Requested parallelism; this build executes single-threaded either way,
    // which is also the only mode with bitwise determinism guarantees.
    int workers = 1;
};

// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
// Throws ConfigError naming the line on anything else.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies one assignment. Unknown keys and unparseable values are
// ConfigError.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

void apply_config_map(RunConfig& cfg, const std::map<std::string, std::string>& entries);

// The effective configuration as one line-delimited JSON record, emitted at
// the head of every metrics stream.
std::string config_echo_json(const RunConfig& cfg);

// RANK_SEED from the environment; empty when unset, ConfigError when set to
// a non-integer.
std::optional<std::uint64_t> seed_from_env();

}  // namespace listrank
