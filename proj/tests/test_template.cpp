// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "listrank/permutation.hpp"
#include "listrank/rng.hpp"
#include "listrank/template.hpp"

using namespace listrank;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing golden file: " << path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string golden_path(const char* name) {
    return std::string(LISTRANK_GOLDEN_DIR) + "/" + name;
}

Item make_item(int id, std::string title, std::vector<std::string> attrs = {}) {
    Item it;
    it.item_id = id;
    it.title = std::move(title);
    it.attributes = std::move(attrs);
    return it;
}

CandidateSlate movie_prompt_slate() {
    CandidateSlate slate;
    slate.items = {make_item(1, "Starman", {"Adventure", "Drama", "Romance"}),
                   make_item(2, "Jumanji (1995)", {"Adventure", "Children's", "Fantasy"}),
                   make_item(3, "Heat", {"Action", "Crime", "Thriller"})};
    slate.ratings = {4, 5, 3};
    return slate;
}

HistorySequence movie_prompt_history() {
    HistorySequence h;
    h.entries = {{make_item(10, "Independence Day", {"Action", "SciFi", "War"}), 3},
                 {make_item(11, "Close Encounters of the Third Kind (1977)", {"Drama", "Sci-Fi"}),
                  4}};
    return h;
}

}  // namespace

TEST_CASE("target_ranking sorts by rating with title tie-break") {
    const CandidateSlate slate = movie_prompt_slate();
    const TargetRanking tau = target_ranking(slate);
    CHECK(tau == TargetRanking{1, 0, 2});
    CHECK(render_target(tau, slate) == "B A C");

    CandidateSlate tied;
    tied.items = {make_item(1, "Blade"), make_item(2, "Alien")};
    tied.ratings = {5, 5};
    CHECK(target_ranking(tied) == TargetRanking{1, 0});        // Alien first
    CHECK(target_ranking(tied, TieBreak::kLabel) == TargetRanking{0, 1});

    // Tie-break is case-insensitive on the title bytes.
    tied.items = {make_item(1, "blade"), make_item(2, "ALIEN")};
    CHECK(target_ranking(tied) == TargetRanking{1, 0});

    CandidateSlate empty;
    CHECK_THROWS(target_ranking(empty));
    CandidateSlate unrated = movie_prompt_slate();
    unrated.ratings.clear();
    CHECK_THROWS(target_ranking(unrated));
}

TEST_CASE("target_ranking matches a brute-force oracle for distinct ratings") {
    // Every input order of a 5-item slate with distinct ratings must produce
    // the same item-level order as sorting by rating.
    std::vector<Item> items;
    std::vector<int> ratings = {2, 5, 1, 4, 3};
    for (int i = 0; i < 5; ++i) items.push_back(make_item(100 + i, "t" + std::to_string(i)));

    std::vector<int> idx = {0, 1, 2, 3, 4};
    do {
        CandidateSlate slate;
        for (int i : idx) {
            slate.items.push_back(items[static_cast<size_t>(i)]);
            slate.ratings.push_back(ratings[static_cast<size_t>(i)]);
        }
        const TargetRanking tau = target_ranking(slate);
        // Oracle: ranks must visit ratings 5, 4, 3, 2, 1 in order.
        for (int r = 0; r < 5; ++r) {
            CHECK(slate.ratings[static_cast<size_t>(tau[static_cast<size_t>(r)])] == 5 - r);
        }
    } while (std::next_permutation(idx.begin(), idx.end()));
}

TEST_CASE("target_ranking is invariant to input reordering up to relabeling") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 2 + trial % 5;
        CandidateSlate slate;
        for (int i = 0; i < m; ++i) {
            slate.items.push_back(make_item(i, "title" + std::to_string(i)));
            slate.ratings.push_back(1 + static_cast<int>(rng.below(3)));  // force ties
        }
        const TargetRanking tau = target_ranking(slate);

        const Permutation p = random_permutation(m, Rng::mix(7, static_cast<std::uint64_t>(trial)));
        CandidateSlate permuted;
        permuted.items = apply_permutation(p, slate.items);
        permuted.ratings = apply_permutation(p, slate.ratings);
        const TargetRanking tau2 = target_ranking(permuted);

        // Mapping permuted positions back to original ones recovers the same
        // item-level order.
        for (int r = 0; r < m; ++r) {
            CHECK(p.map[static_cast<size_t>(tau2[static_cast<size_t>(r)])] ==
                  tau[static_cast<size_t>(r)]);
        }
    }
}

TEST_CASE("render_source reproduces the golden prompt byte for byte") {
    const std::string text = render_source(movie_prompt_history(), movie_prompt_slate());
    CHECK(text == read_file(golden_path("ranking_prompt_source.txt")));
    CHECK(render_source(movie_prompt_history(), movie_prompt_slate()) == text);  // deterministic
}

TEST_CASE("render_source omits the genres field when attributes are empty") {
    HistorySequence h;
    h.entries = {{make_item(1, "Pi"), 5}};
    CandidateSlate slate;
    slate.items = {make_item(2, "Solaris"), make_item(3, "Stalker", {"Drama", "Sci-Fi"})};
    slate.ratings = {3, 4};
    CHECK(render_source(h, slate) == read_file(golden_path("empty_attrs_source.txt")));
}

TEST_CASE("render_source rejects slates beyond the label alphabet") {
    CandidateSlate slate;
    for (int i = 0; i < 27; ++i) {
        slate.items.push_back(make_item(i, "t" + std::to_string(i)));
        slate.ratings.push_back(3);
    }
    CHECK_THROWS(render_source(HistorySequence{}, slate));
    CHECK_THROWS(candidate_label(26));
    CHECK_THROWS(candidate_label(-1));
    CHECK(candidate_label(0) == 'A');
    CHECK(candidate_label(25) == 'Z');
}

TEST_CASE("render_target and parse_ranking are mutually inverse") {
    CandidateSlate slate3;
    for (int i = 0; i < 3; ++i) {
        slate3.items.push_back(make_item(i, "t" + std::to_string(i)));
        slate3.ratings.push_back(3);
    }
    CHECK(render_target({0, 1, 2}, slate3) == "A B C");
    CHECK(render_target({1, 0, 2}, slate3) == "B A C");
    CHECK_THROWS(render_target({0, 1}, slate3));

    for (int trial = 0; trial < 40; ++trial) {
        const int m = 1 + trial % 10;
        CandidateSlate slate;
        for (int i = 0; i < m; ++i) {
            slate.items.push_back(make_item(i, "t" + std::to_string(i)));
            slate.ratings.push_back(3);
        }
        TargetRanking tau(random_permutation(m, Rng::mix(3, static_cast<std::uint64_t>(trial)))
                              .map);
        CHECK(parse_ranking(render_target(tau, slate), m, ParseMode::kStrict) == tau);
    }
}

TEST_CASE("parse_ranking distinguishes error kinds in strict mode") {
    CHECK(parse_ranking("B A C", 3, ParseMode::kStrict) == TargetRanking{1, 0, 2});

    CHECK_THROWS_WITH_AS(parse_ranking("B B C", 3, ParseMode::kStrict),
                         "parse_ranking: duplicate label \"B\"", ParseError);
    CHECK_THROWS_WITH_AS(parse_ranking("B A D", 3, ParseMode::kStrict),
                         "parse_ranking: unknown label \"D\"", ParseError);
    CHECK_THROWS_WITH_AS(parse_ranking("B A", 3, ParseMode::kStrict),
                         "parse_ranking: missing labels", ParseError);
    CHECK_THROWS_WITH_AS(parse_ranking("BA C", 3, ParseMode::kStrict),
                         "parse_ranking: unknown label \"BA\"", ParseError);

    try {
        parse_ranking("B B C", 3, ParseMode::kStrict);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseErrorKind::kDuplicateLabel);
    }
    try {
        parse_ranking("B Z", 3, ParseMode::kStrict);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseErrorKind::kUnknownLabel);
    }
    try {
        parse_ranking("", 3, ParseMode::kStrict);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseErrorKind::kMissingLabel);
    }
}

TEST_CASE("parse_ranking repairs malformed sequences") {
    CHECK(parse_ranking("B Z", 3, ParseMode::kRepair) == TargetRanking{1, 0, 2});
    CHECK(parse_ranking("B B C", 3, ParseMode::kRepair) == TargetRanking{1, 2, 0});
    CHECK(parse_ranking("", 3, ParseMode::kRepair) == TargetRanking{0, 1, 2});
    CHECK(parse_ranking("C C C A junk B", 3, ParseMode::kRepair) == TargetRanking{2, 0, 1});
    CHECK_THROWS(parse_ranking("A", 0, ParseMode::kRepair));
    CHECK_THROWS(parse_ranking("A", 27, ParseMode::kRepair));
}

TEST_CASE("label_vocab lays out labels then specials") {
    const Vocabulary v = label_vocab(3);
    CHECK(v.size == 6);
    CHECK(v.label_tokens == std::vector<int>{0, 1, 2});
    CHECK(v.begin_id == 3);
    CHECK(v.end_id == 4);
    CHECK(v.pad_id == 5);

    const Vocabulary again = label_vocab(3);
    CHECK(again.label_tokens == v.label_tokens);
    CHECK(again.begin_id == v.begin_id);

    std::set<int> ids(v.label_tokens.begin(), v.label_tokens.end());
    ids.insert(v.begin_id);
    ids.insert(v.end_id);
    ids.insert(v.pad_id);
    CHECK(static_cast<int>(ids.size()) == v.size);

    CHECK(label_vocab(25).size == 28);
    CHECK_THROWS(label_vocab(0));
    CHECK_THROWS(label_vocab(27));

    CHECK(target_tokens({1, 0, 2}, v) == std::vector<int>{1, 0, 2});
    CHECK_THROWS(target_tokens({3}, v));
}

TEST_CASE("render_source separates inputs that differ in any field") {
    const HistorySequence base_h = movie_prompt_history();
    const CandidateSlate base_s = movie_prompt_slate();
    std::set<std::string> seen;
    seen.insert(render_source(base_h, base_s));

    {
        CandidateSlate s = base_s;
        s.items[0].title = "Starmen";
        seen.insert(render_source(base_h, s));
    }
    {
        CandidateSlate s = base_s;
        s.items[1].attributes[0] = "Action";
        seen.insert(render_source(base_h, s));
    }
    {
        CandidateSlate s = base_s;
        std::swap(s.items[2].attributes[0], s.items[2].attributes[1]);
        seen.insert(render_source(base_h, s));
    }
    {
        HistorySequence h = base_h;
        h.entries[0].rating = 4;
        seen.insert(render_source(h, base_s));
    }
    {
        HistorySequence h = base_h;
        std::swap(h.entries[0], h.entries[1]);
        seen.insert(render_source(h, base_s));
    }
    {
        HistorySequence h = base_h;
        h.entries.pop_back();
        seen.insert(render_source(h, base_s));
    }
    CHECK(seen.size() == 7);
}
