// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic corpus generation with a known rating oracle, delimited-file
// ingestion, the temporal train/valid/test split, and example construction.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "listrank/template.hpp"

namespace listrank {

// One logged (user, item) event. Ratings are 1..5, timestamps are epoch
// seconds and non-negative.
struct Interaction {
    int user_id = 0;
    int item_id = 0;
    int rating = 0;
    long long timestamp = 0;

    bool operator==(const Interaction&) const = default;
};

// Item content keyed by id. Lookups of unknown ids throw DataError: examples
// must never be built against fabricated content.
struct ItemCatalog {
    std::unordered_map<int, Item> items;

    const Item& at(int item_id) const;
    bool contains(int item_id) const { return items.count(item_id) != 0; }
    int size() const { return static_cast<int>(items.size()); }
};

// Knobs for the synthetic generator beyond the corpus dimensions.
struct SyntheticConfig {
    int actions_per_user = 40;
    double rating_noise_std = 0.3;
};

struct SyntheticDataset {
    std::vector<Interaction> interactions;
    ItemCatalog catalog;
};

// Latent-factor corpus: user and item vectors are drawn from a seeded
// spherical Gaussian (dim 8) and every rating is
// clamp(round(3 + 1.5*cosine(u, v) + noise), 1, 5). Genres are named after
// the latent anchors nearest each item vector, so content carries rating
// signal; titles come from seeded word lists. Timestamps strictly increase
// within each user. Same seed, same corpus, bit for bit.
SyntheticDataset generate_synthetic(int n_users, int n_items, const SyntheticConfig& config,
                                    std::uint64_t seed);

// What to do with a malformed input line.
enum class MalformedLinePolicy {
    kAbort,  // throw DataError naming path and line
    kSkip,   // record a warning and continue
};

struct LoadReport {
    std::vector<std::string> warnings;  // one "path:line: reason" per skip
    int skipped = 0;
};

// Parses "user::item::rating::timestamp" lines (delimiter configurable).
std::vector<Interaction> load_interactions(const std::string& path,
                                           const std::string& delimiter = "::",
                                           MalformedLinePolicy policy = MalformedLinePolicy::kAbort,
                                           LoadReport* report = nullptr);

// Parses "item::title::genre|genre|..." lines. An empty genre field means no
// attributes.
ItemCatalog load_items(const std::string& path, const std::string& delimiter = "::",
                       MalformedLinePolicy policy = MalformedLinePolicy::kAbort,
                       LoadReport* report = nullptr);

// Inverse of the loaders, used to persist generated corpora.
void write_interactions(const std::string& path, const std::vector<Interaction>& interactions,
                        const std::string& delimiter = "::");
void write_items(const std::string& path, const ItemCatalog& catalog,
                 const std::string& delimiter = "::");

// One user's interactions sorted by (timestamp, item_id).
struct UserSequence {
    int user_id = 0;
    std::vector<Interaction> actions;
};

// Temporal partition: per user the last m actions are the test slate, the m
// before them the validation slate, and everything earlier is the training
// region. Users shorter than 2m + history_len are dropped, not failed.
struct DatasetSplit {
    std::vector<UserSequence> users;  // kept users, ascending user_id
    int dropped_users = 0;
};

DatasetSplit split_user_sequences(const std::vector<Interaction>& interactions, int m,
                                  int history_len);

struct RankingExample {
    int user_id = 0;
    HistorySequence history;
    CandidateSlate slate;
    TargetRanking target;
};

struct ExampleSet {
    std::vector<RankingExample> train;
    std::vector<RankingExample> valid;
    std::vector<RankingExample> test;
};

// Builds (history, slate, target) triples from a split. Valid and test use
// the history_len actions immediately preceding their slates, reaching back
// across region boundaries; training slates are sliding windows of stride 1
// inside the training region, so a kept user still yields zero training
// examples when that region is shorter than history_len + m. Targets come
// from target_ranking (rating descending, title tie-break).
ExampleSet build_examples(const DatasetSplit& split, const ItemCatalog& catalog, int m,
                          int history_len);

// Line-delimited records {history:[{item_id,rating}...], slate:[...],
// target:[...], user_id}; item content is re-joined from the catalog on read.
void write_examples_jsonl(const std::string& path, const std::vector<RankingExample>& examples);
std::vector<RankingExample> read_examples_jsonl(const std::string& path,
                                                const ItemCatalog& catalog);

}  // namespace listrank
