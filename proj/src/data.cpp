// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0

#include "listrank/data.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "listrank/errors.hpp"
#include "listrank/rng.hpp"

namespace listrank {
namespace {

constexpr int kLatentDim = 8;

const char* const kGenreNames[] = {
    "Action", "Adventure", "Animation", "Comedy",  "Crime",   "Documentary",
    "Drama",  "Fantasy",   "Horror",    "Musical", "Mystery", "Romance",
    "Sci-Fi", "Thriller",  "War",       "Western",
};
constexpr int kNumGenres = 16;

const char* const kTitleAdjectives[] = {
    "Ancient", "Broken",  "Burning", "Crimson",  "Distant", "Electric",
    "Frozen",  "Gentle",  "Golden",  "Hidden",   "Hollow",  "Infinite",
    "Iron",    "Jade",    "Lunar",   "Paper",    "Quiet",   "Radiant",
    "Savage",  "Silent",  "Twilight", "Umber",   "Velvet",  "Wild",
};
const char* const kTitleNouns[] = {
    "Archive", "Ballad",  "Canyon",  "Circus",   "Compass", "Delta",
    "Empire",  "Fortress", "Frontier", "Garden", "Harbor",  "Horizon",
    "Island",  "Lantern", "Meadow",  "Mirror",   "Monsoon", "Orchard",
    "Reactor", "Signal",  "Station", "Summit",   "Theater", "Voyage",
};
constexpr int kNumWords = 24;

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> draw_latent(Rng& rng) {
    std::vector<double> v(kLatentDim);
    for (double& x : v) x = rng.normal();
    return v;
}

std::vector<std::string> split_fields(const std::string& line, const std::string& delim) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        const size_t hit = line.find(delim, pos);
        if (hit == std::string::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, hit - pos));
        pos = hit + delim.size();
    }
}

bool parse_ll(const std::string& s, long long* out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [ptr, ec] = std::from_chars(b, e, *out);
    return ec == std::errc() && ptr == e && !s.empty();
}

bool parse_int(const std::string& s, int* out) {
    long long v = 0;
    if (!parse_ll(s, &v)) return false;
    if (v < INT_MIN || v > INT_MAX) return false;
    *out = static_cast<int>(v);
    return true;
}

// Either throws (abort policy) or records a warning and returns.
void report_bad_line(const std::string& path, int line_no, const std::string& why,
                     MalformedLinePolicy policy, LoadReport* report) {
    const std::string msg = path + ":" + std::to_string(line_no) + ": " + why;
    if (policy == MalformedLinePolicy::kAbort) throw DataError(msg);
    if (report != nullptr) {
        report->warnings.push_back(msg);
        ++report->skipped;
    }
}

RankingExample make_example(const UserSequence& user, const ItemCatalog& catalog,
                            int history_begin, int slate_begin, int m, int history_len) {
    RankingExample ex;
    ex.user_id = user.user_id;
    for (int i = history_begin; i < history_begin + history_len; ++i) {
        const Interaction& a = user.actions[static_cast<size_t>(i)];
        ex.history.entries.push_back({catalog.at(a.item_id), a.rating});
    }
    for (int i = slate_begin; i < slate_begin + m; ++i) {
        const Interaction& a = user.actions[static_cast<size_t>(i)];
        ex.slate.items.push_back(catalog.at(a.item_id));
        ex.slate.ratings.push_back(a.rating);
    }
    ex.target = target_ranking(ex.slate);
    return ex;
}

}  // namespace

const Item& ItemCatalog::at(int item_id) const {
    const auto it = items.find(item_id);
    if (it == items.end()) {
        throw DataError("unknown item_id " + std::to_string(item_id));
    }
    return it->second;
}

SyntheticDataset generate_synthetic(int n_users, int n_items, const SyntheticConfig& config,
                                    std::uint64_t seed) {
    if (n_users < 1 || n_items < 1) throw std::invalid_argument("corpus sizes must be positive");
    if (config.actions_per_user < 1) throw std::invalid_argument("actions_per_user must be >= 1");
    if (config.actions_per_user > n_items) {
        throw std::invalid_argument("actions_per_user exceeds n_items; users interact with "
                                    "distinct items");
    }
    if (!(config.rating_noise_std >= 0.0)) {
        throw std::invalid_argument("rating_noise_std must be >= 0");
    }

    SyntheticDataset out;

    // Genre anchors live in the same latent space as the items, and each item
    // is tagged with its nearest anchors. Content therefore predicts ratings
    // the way genres predict taste.
    Rng anchor_rng(Rng::mix(seed, 101));
    std::vector<std::vector<double>> anchors;
    anchors.reserve(kNumGenres);
    for (int g = 0; g < kNumGenres; ++g) anchors.push_back(draw_latent(anchor_rng));

    Rng item_rng(Rng::mix(seed, 202));
    std::vector<std::vector<double>> item_latent;
    item_latent.reserve(static_cast<size_t>(n_items));
    for (int i = 0; i < n_items; ++i) {
        const int id = i + 1;
        Item item;
        item.item_id = id;
        item.title = std::string(kTitleAdjectives[item_rng.below(kNumWords)]) + " " +
                     kTitleNouns[item_rng.below(kNumWords)];
        if (item_rng.below(5) < 2) {
            item.title += " (" + std::to_string(1950 + item_rng.below(60)) + ")";
        }
        item_latent.push_back(draw_latent(item_rng));

        std::vector<int> order(kNumGenres);
        std::iota(order.begin(), order.end(), 0);
        const auto& v = item_latent.back();
        const int count = 1 + static_cast<int>(item_rng.below(3));
        std::partial_sort(order.begin(), order.begin() + count, order.end(),
                          [&](int a, int b) {
                              const double ca = cosine(v, anchors[static_cast<size_t>(a)]);
                              const double cb = cosine(v, anchors[static_cast<size_t>(b)]);
                              if (ca != cb) return ca > cb;
                              return a < b;
                          });
        for (int g = 0; g < count; ++g) {
            item.attributes.push_back(kGenreNames[order[static_cast<size_t>(g)]]);
        }
        out.catalog.items.emplace(id, std::move(item));
    }

    std::vector<int> ids(static_cast<size_t>(n_items));
    std::iota(ids.begin(), ids.end(), 1);
    const int k = config.actions_per_user;
    for (int u = 0; u < n_users; ++u) {
        Rng rng(Rng::mix(seed, 1000003ULL + static_cast<std::uint64_t>(u)));
        const std::vector<double> taste = draw_latent(rng);
        for (int j = 0; j < k; ++j) {
            const size_t swap_with =
                static_cast<size_t>(j) + static_cast<size_t>(rng.below(
                                             static_cast<std::uint64_t>(n_items - j)));
            std::swap(ids[static_cast<size_t>(j)], ids[swap_with]);
        }
        for (int j = 0; j < k; ++j) {
            const int item_id = ids[static_cast<size_t>(j)];
            const double mean =
                3.0 + 1.5 * cosine(taste, item_latent[static_cast<size_t>(item_id - 1)]);
            const double raw = mean + config.rating_noise_std * rng.normal();
            const int rating = std::clamp(static_cast<int>(std::llround(raw)), 1, 5);
            out.interactions.push_back(
                {u + 1, item_id, rating, 978000000LL + static_cast<long long>(j) * 60});
        }
    }
    return out;
}

std::vector<Interaction> load_interactions(const std::string& path, const std::string& delimiter,
                                           MalformedLinePolicy policy, LoadReport* report) {
    if (delimiter.empty()) throw std::invalid_argument("delimiter must be non-empty");
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<Interaction> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::vector<std::string> f = split_fields(line, delimiter);
        if (f.size() != 4) {
            report_bad_line(path, line_no,
                            "expected 4 fields, got " + std::to_string(f.size()), policy, report);
            continue;
        }
        Interaction it;
        if (!parse_int(f[0], &it.user_id) || !parse_int(f[1], &it.item_id) ||
            !parse_int(f[2], &it.rating) || !parse_ll(f[3], &it.timestamp)) {
            report_bad_line(path, line_no, "non-integer field", policy, report);
            continue;
        }
        if (it.rating < 1 || it.rating > 5) {
            report_bad_line(path, line_no, "rating " + f[2] + " outside [1,5]", policy, report);
            continue;
        }
        if (it.timestamp < 0) {
            report_bad_line(path, line_no, "negative timestamp", policy, report);
            continue;
        }
        out.push_back(it);
    }
    return out;
}

ItemCatalog load_items(const std::string& path, const std::string& delimiter,
                       MalformedLinePolicy policy, LoadReport* report) {
    if (delimiter.empty()) throw std::invalid_argument("delimiter must be non-empty");
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    ItemCatalog out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::vector<std::string> f = split_fields(line, delimiter);
        if (f.size() != 3) {
            report_bad_line(path, line_no,
                            "expected 3 fields, got " + std::to_string(f.size()), policy, report);
            continue;
        }
        Item item;
        if (!parse_int(f[0], &item.item_id)) {
            report_bad_line(path, line_no, "non-integer item_id", policy, report);
            continue;
        }
        if (f[1].empty()) {
            report_bad_line(path, line_no, "empty title", policy, report);
            continue;
        }
        if (out.contains(item.item_id)) {
            report_bad_line(path, line_no, "duplicate item_id " + f[0], policy, report);
            continue;
        }
        item.title = f[1];
        for (const std::string& g : split_fields(f[2], "|")) {
            if (!g.empty()) item.attributes.push_back(g);
        }
        out.items.emplace(item.item_id, std::move(item));
    }
    return out;
}

void write_interactions(const std::string& path, const std::vector<Interaction>& interactions,
                        const std::string& delimiter) {
    std::ofstream outf(path);
    if (!outf) throw DataError("cannot write " + path);
    for (const Interaction& it : interactions) {
        outf << it.user_id << delimiter << it.item_id << delimiter << it.rating << delimiter
             << it.timestamp << "\n";
    }
}

void write_items(const std::string& path, const ItemCatalog& catalog,
                 const std::string& delimiter) {
    std::ofstream outf(path);
    if (!outf) throw DataError("cannot write " + path);
    std::vector<int> ids;
    ids.reserve(catalog.items.size());
    for (const auto& [id, item] : catalog.items) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
        const Item& item = catalog.items.at(id);
        outf << id << delimiter << item.title << delimiter;
        for (size_t i = 0; i < item.attributes.size(); ++i) {
            if (i > 0) outf << "|";
            outf << item.attributes[i];
        }
        outf << "\n";
    }
}

DatasetSplit split_user_sequences(const std::vector<Interaction>& interactions, int m,
                                  int history_len) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (history_len < 1) throw std::invalid_argument("history_len must be >= 1");
    std::map<int, std::vector<Interaction>> by_user;
    for (const Interaction& it : interactions) by_user[it.user_id].push_back(it);

    DatasetSplit out;
    const size_t need = static_cast<size_t>(2 * m + history_len);
    for (auto& [user_id, actions] : by_user) {
        std::sort(actions.begin(), actions.end(), [](const Interaction& a, const Interaction& b) {
            if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
            return a.item_id < b.item_id;
        });
        if (actions.size() < need) {
            ++out.dropped_users;
            continue;
        }
        out.users.push_back({user_id, std::move(actions)});
    }
    return out;
}

ExampleSet build_examples(const DatasetSplit& split, const ItemCatalog& catalog, int m,
                          int history_len) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (history_len < 1) throw std::invalid_argument("history_len must be >= 1");
    ExampleSet out;
    for (const UserSequence& user : split.users) {
        const int n = static_cast<int>(user.actions.size());
        if (n < 2 * m + history_len) {
            throw std::invalid_argument("split user " + std::to_string(user.user_id) +
                                        " shorter than 2m + history_len");
        }
        const int train_region = n - 2 * m;
        for (int s = history_len; s + m <= train_region; ++s) {
            out.train.push_back(make_example(user, catalog, s - history_len, s, m, history_len));
        }
        out.valid.push_back(make_example(user, catalog, train_region - history_len, train_region,
                                         m, history_len));
        out.test.push_back(
            make_example(user, catalog, n - m - history_len, n - m, m, history_len));
    }
    return out;
}

void write_examples_jsonl(const std::string& path, const std::vector<RankingExample>& examples) {
    std::ofstream outf(path);
    if (!outf) throw DataError("cannot write " + path);
    for (const RankingExample& ex : examples) {
        nlohmann::json j;
        j["user_id"] = ex.user_id;
        j["history"] = nlohmann::json::array();
        for (const HistoryEntry& h : ex.history.entries) {
            j["history"].push_back({{"item_id", h.item.item_id}, {"rating", h.rating}});
        }
        j["slate"] = nlohmann::json::array();
        for (size_t i = 0; i < ex.slate.items.size(); ++i) {
            j["slate"].push_back(
                {{"item_id", ex.slate.items[i].item_id}, {"rating", ex.slate.ratings[i]}});
        }
        j["target"] = ex.target;
        outf << j.dump() << "\n";
    }
}

std::vector<RankingExample> read_examples_jsonl(const std::string& path,
                                                const ItemCatalog& catalog) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<RankingExample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path + ":" + std::to_string(line_no) + ": ";
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            RankingExample ex;
            ex.user_id = j.at("user_id").get<int>();
            for (const auto& h : j.at("history")) {
                const int rating = h.at("rating").get<int>();
                if (rating < 1 || rating > 5) throw DataError("rating outside [1,5]");
                ex.history.entries.push_back({catalog.at(h.at("item_id").get<int>()), rating});
            }
            for (const auto& s : j.at("slate")) {
                const int rating = s.at("rating").get<int>();
                if (rating < 1 || rating > 5) throw DataError("rating outside [1,5]");
                ex.slate.items.push_back(catalog.at(s.at("item_id").get<int>()));
                ex.slate.ratings.push_back(rating);
            }
            ex.target = j.at("target").get<std::vector<int>>();
            const size_t msize = ex.slate.items.size();
            if (ex.history.entries.empty() || msize == 0) {
                throw DataError("empty history or slate");
            }
            std::vector<char> seen(msize, 0);
            if (ex.target.size() != msize) throw DataError("target length mismatch");
            for (int t : ex.target) {
                if (t < 0 || static_cast<size_t>(t) >= msize || seen[static_cast<size_t>(t)]) {
                    throw DataError("target is not a permutation");
                }
                seen[static_cast<size_t>(t)] = 1;
            }
            out.push_back(std::move(ex));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }
    }
    return out;
}

}  // namespace listrank
