// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "listrank/permutation.hpp"

namespace listrank {

struct Item {
    int item_id = 0;
    std::string title;                    // non-empty
    std::vector<std::string> attributes;  // may be empty
};

struct HistoryEntry {
    Item item;
    int rating = 0;
};

// Oldest entry first.
struct HistorySequence {
    std::vector<HistoryEntry> entries;
};

// Candidates in input order; labels A, B, ... derive from position alone.
// ratings is ground truth, parallel to items; empty at inference time.
struct CandidateSlate {
    std::vector<Item> items;
    std::vector<int> ratings;

    int size() const { return static_cast<int>(items.size()); }
};

// order[rank] = input position of the item at that rank, best first.
using TargetRanking = std::vector<int>;

// Single-letter label of the candidate at a given input position.
char candidate_label(int position);

enum class TieBreak {
    kTitle,  // equal ratings ordered by lowercased title bytes
    kLabel,  // equal ratings keep input (label) order
};

// Sorts by rating descending; ties by the chosen policy. Throws if the slate
// is empty or ratings are missing.
TargetRanking target_ranking(const CandidateSlate& slate, TieBreak tie_break = TieBreak::kTitle);

// Full prompt text: instruction block, history and candidate sections, and
// the response preamble, ending in a newline. Byte-normative against the
// golden files. Throws if the slate exceeds the 26-letter label alphabet.
std::string render_source(const HistorySequence& history, const CandidateSlate& slate);

// Space-separated labels in ranked order, e.g. "B A C". No trailing newline.
std::string render_target(const TargetRanking& tau, const CandidateSlate& slate);

enum class ParseMode { kStrict, kRepair };

enum class ParseErrorKind { kDuplicateLabel, kMissingLabel, kUnknownLabel };

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ParseErrorKind kind() const { return kind_; }

private:
    ParseErrorKind kind_;
};

// Reads a whitespace-separated label sequence back into a ranking over m
// slots. Strict mode throws ParseError on duplicate, unknown, or missing
// labels. Repair mode keeps the first occurrence of each valid label, drops
// the rest, then appends missing labels in input-slate order.
TargetRanking parse_ranking(const std::string& text, int m, ParseMode mode);

// Token-id layout for an m-candidate slate: label ids 0..m-1 (one per
// letter), then begin = m, end = m + 1, pad = m + 2, so size = m + 3.
Vocabulary label_vocab(int m);

// Label token ids of a ranking, in ranked order.
std::vector<int> target_tokens(const TargetRanking& tau, const Vocabulary& vocab);

// One training or evaluation example, fully rendered.
struct PromptRecord {
    std::string source_text;
    std::string target_text;
    std::vector<int> target_label_tokens;
    CandidateSlate slate;
    std::optional<Permutation> permutation_applied;
};

}  // namespace listrank
