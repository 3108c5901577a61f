// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/template.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace listrank {

namespace {

constexpr int kMaxLabels = 26;

const char* kInstructionBlock =
    "### Instruction:\n"
    "Given the user's interaction history, which reveals their items preferences, "
    "generate a preference-based ranking of the provided candidate items. "
    "Your task is to rank a list of new candidate movies.\n"
    "Your ranking should include all the candidate movies provided, and it should "
    "be based solely on the user's preferences, without regard to the initial "
    "order of the candidates.\n";

const char* kResponsePreamble = "Given the historical interaction, the ranking result is:\n";

std::string ascii_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string join_attributes(const std::vector<std::string>& attrs) {
    std::string out;
    for (size_t i = 0; i < attrs.size(); ++i) {
        if (i > 0) out += '|';
        out += attrs[i];
    }
    return out;
}

void append_item_fields(std::string& out, const Item& item) {
    out += "title: ";
    out += item.title;
    if (!item.attributes.empty()) {
        out += " genres: ";
        out += join_attributes(item.attributes);
    }
}

}  // namespace

char candidate_label(int position) {
    if (position < 0 || position >= kMaxLabels) {
        throw std::invalid_argument("candidate_label: position outside the label alphabet");
    }
    return static_cast<char>('A' + position);
}

TargetRanking target_ranking(const CandidateSlate& slate, TieBreak tie_break) {
    const int m = slate.size();
    if (m == 0) throw std::invalid_argument("target_ranking: empty slate");
    if (static_cast<int>(slate.ratings.size()) != m) {
        throw std::invalid_argument("target_ranking: missing ratings");
    }
    std::vector<std::string> lowered;
    if (tie_break == TieBreak::kTitle) {
        lowered.reserve(static_cast<size_t>(m));
        for (const Item& it : slate.items) lowered.push_back(ascii_lower(it.title));
    }
    TargetRanking order(static_cast<size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const int ra = slate.ratings[static_cast<size_t>(a)];
        const int rb = slate.ratings[static_cast<size_t>(b)];
        if (ra != rb) return ra > rb;
        if (tie_break == TieBreak::kTitle) {
            return lowered[static_cast<size_t>(a)] < lowered[static_cast<size_t>(b)];
        }
        return false;  // stable sort keeps input order
    });
    return order;
}

std::string render_source(const HistorySequence& history, const CandidateSlate& slate) {
    if (slate.size() > kMaxLabels) {
        throw std::invalid_argument("render_source: label alphabet exhausted");
    }
    std::string out = kInstructionBlock;
    out += "### Input:\n";
    out += "[User Interaction History]:\n";
    for (const HistoryEntry& e : history.entries) {
        append_item_fields(out, e.item);
        out += " rating: ";
        out += std::to_string(e.rating);
        out += '\n';
    }
    out += "[Candidate Items]:\n";
    for (int i = 0; i < slate.size(); ++i) {
        out += '(';
        out += candidate_label(i);
        out += ") ";
        append_item_fields(out, slate.items[static_cast<size_t>(i)]);
        out += '\n';
    }
    out += "### Response:\n";
    out += kResponsePreamble;
    return out;
}

std::string render_target(const TargetRanking& tau, const CandidateSlate& slate) {
    if (static_cast<int>(tau.size()) != slate.size()) {
        throw std::invalid_argument("render_target: ranking does not cover the slate");
    }
    std::string out;
    for (size_t r = 0; r < tau.size(); ++r) {
        if (r > 0) out += ' ';
        out += candidate_label(tau[r]);
    }
    return out;
}

TargetRanking parse_ranking(const std::string& text, int m, ParseMode mode) {
    if (m < 1 || m > kMaxLabels) throw std::invalid_argument("parse_ranking: m out of range");
    std::istringstream in(text);
    std::string token;
    std::vector<char> seen(static_cast<size_t>(m), 0);
    TargetRanking order;
    while (in >> token) {
        const bool known = token.size() == 1 && token[0] >= 'A' && token[0] < 'A' + m;
        if (!known) {
            if (mode == ParseMode::kStrict) {
                throw ParseError(ParseErrorKind::kUnknownLabel,
                                 "parse_ranking: unknown label \"" + token + "\"");
            }
            continue;
        }
        const int pos = token[0] - 'A';
        if (seen[static_cast<size_t>(pos)]) {
            if (mode == ParseMode::kStrict) {
                throw ParseError(ParseErrorKind::kDuplicateLabel,
                                 "parse_ranking: duplicate label \"" + token + "\"");
            }
            continue;
        }
        seen[static_cast<size_t>(pos)] = 1;
        order.push_back(pos);
    }
    if (static_cast<int>(order.size()) != m) {
        if (mode == ParseMode::kStrict) {
            throw ParseError(ParseErrorKind::kMissingLabel, "parse_ranking: missing labels");
        }
        for (int pos = 0; pos < m; ++pos) {
            if (!seen[static_cast<size_t>(pos)]) order.push_back(pos);
        }
    }
    return order;
}

Vocabulary label_vocab(int m) {
    if (m < 1 || m > kMaxLabels) throw std::invalid_argument("label_vocab: m out of range");
    Vocabulary v;
    v.label_tokens.resize(static_cast<size_t>(m));
    std::iota(v.label_tokens.begin(), v.label_tokens.end(), 0);
    v.begin_id = m;
    v.end_id = m + 1;
    v.pad_id = m + 2;
    v.size = m + 3;
    return v;
}

std::vector<int> target_tokens(const TargetRanking& tau, const Vocabulary& vocab) {
    std::vector<int> out;
    out.reserve(tau.size());
    for (int pos : tau) {
        if (pos < 0 || pos >= vocab.num_labels()) {
            throw std::invalid_argument("target_tokens: rank position outside the vocabulary");
        }
        out.push_back(vocab.label_tokens[static_cast<size_t>(pos)]);
    }
    return out;
}

}  // namespace listrank
