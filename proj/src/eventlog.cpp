#include "facetpath/eventlog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "facetpath/text.hpp"
#include "json.hpp"

namespace facetpath {

using nlohmann::json;

std::string to_json_line(const SessionEvent& e) {
    json j;
    j["session_id"] = e.session_id;
    j["timestamp"] = e.timestamp;
    j["kind"] = e.kind == EventKind::view ? "view" : "search";
    j["product_id"] = e.product_id ? json(*e.product_id) : json(nullptr);
    j["query"] = e.query ? json(*e.query) : json(nullptr);
    if (e.kind == EventKind::search) {
        j["result_set"] = e.result_set;
        j["clicked"] = e.clicked;
    } else {
        j["result_set"] = nullptr;
        j["clicked"] = nullptr;
    }
    return j.dump();
}

SessionEvent event_from_json_line(const std::string& line) {
    auto j = json::parse(line);
    SessionEvent e;
    e.session_id = j.at("session_id").get<std::string>();
    e.timestamp = j.at("timestamp").get<std::int64_t>();
    auto kind = j.at("kind").get<std::string>();
    if (kind == "view") {
        e.kind = EventKind::view;
    } else if (kind == "search") {
        e.kind = EventKind::search;
    } else {
        throw Error("unknown event kind '" + kind + "'");
    }
    auto opt_string = [&j](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        return it->get<std::string>();
    };
    auto list = [&j](const char* key) -> std::vector<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return {};
        return it->get<std::vector<std::string>>();
    };
    e.product_id = opt_string("product_id");
    e.query = opt_string("query");
    e.result_set = list("result_set");
    e.clicked = list("clicked");

    if (e.kind == EventKind::view && (!e.product_id || e.query))
        throw Error("view event must carry product_id and no query");
    if (e.kind == EventKind::search && (!e.query || e.product_id))
        throw Error("search event must carry query and no product_id");
    return e;
}

IngestResult ingest_events(std::vector<SessionEvent> events, const TaxonomyTree& tree) {
    IngestResult result;
    result.events.reserve(events.size());
    for (auto& e : events) {
        if (e.kind == EventKind::view) {
            if (tree.product_index(*e.product_id) < 0) {
                ++result.unknown_products;
                continue;
            }
        } else {
            std::unordered_set<std::string> shown(e.result_set.begin(), e.result_set.end());
            bool subset = std::all_of(e.clicked.begin(), e.clicked.end(),
                                      [&shown](const auto& p) { return shown.contains(p); });
            if (!subset) {
                ++result.rejected_events;
                continue;
            }
            auto drop_unknown = [&](std::vector<ProductId>& ids) {
                auto keep = std::remove_if(ids.begin(), ids.end(), [&](const auto& p) {
                    return tree.product_index(p) < 0;
                });
                result.unknown_products += static_cast<std::size_t>(ids.end() - keep);
                ids.erase(keep, ids.end());
            };
            drop_unknown(e.result_set);
            drop_unknown(e.clicked);
        }
        result.events.push_back(std::move(e));
    }
    std::stable_sort(result.events.begin(), result.events.end(), [](const auto& a, const auto& b) {
        if (a.session_id != b.session_id) return a.session_id < b.session_id;
        return a.timestamp < b.timestamp;
    });
    return result;
}

IngestResult ingest(const std::filesystem::path& log_file, const TaxonomyTree& tree) {
    std::ifstream in(log_file);
    if (!in) throw Error("cannot open event log " + log_file.string());
    std::vector<SessionEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            events.push_back(event_from_json_line(line));
        } catch (const std::exception& e) {
            throw Error(log_file.string() + ":" + std::to_string(line_no) +
                        ": malformed event: " + e.what());
        }
    }
    return ingest_events(std::move(events), tree);
}

ExampleBuild build_examples(const std::vector<SessionEvent>& events, const TaxonomyTree& tree) {
    ExampleBuild out;
    std::string current_session;
    std::vector<ProductId> views;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (i == 0 || e.session_id != current_session) {
            current_session = e.session_id;
            views.clear();
        }
        if (e.kind == EventKind::view) {
            views.push_back(*e.product_id);
            continue;
        }
        for (const auto& clicked : e.clicked) {
            const Path* path = tree.path_of(clicked);
            if (!path) {
                ++out.skipped_clicks;
                continue;
            }
            LabeledExample ex;
            ex.session_id = e.session_id;
            ex.timestamp = e.timestamp;
            ex.search_index = i;
            ex.session_products = views;
            ex.query = *e.query;
            ex.clicked_product = clicked;
            ex.target_path = *path;
            ex.result_set = e.result_set;
            ex.clicked = e.clicked;
            out.examples.push_back(std::move(ex));
        }
    }
    return out;
}

DatasetSplit chronological_split(std::vector<LabeledExample> examples, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split fraction must lie in (0, 1)");
    if (examples.size() < 2) throw Error("need at least two examples to split");
    std::stable_sort(examples.begin(), examples.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    if (examples.front().timestamp == examples.back().timestamp)
        throw Error("cannot split degenerate timeline");

    auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(examples.size())));
    k = std::clamp<std::size_t>(k, 1, examples.size() - 1);
    std::int64_t boundary = examples[k].timestamp;
    // Keep equal timestamps on one side; fall back to the next later timestamp.
    auto first_at = std::lower_bound(examples.begin(), examples.end(), boundary,
                                     [](const auto& e, std::int64_t t) { return e.timestamp < t; });
    if (first_at == examples.begin()) {
        auto next = std::upper_bound(examples.begin(), examples.end(), boundary,
                                     [](std::int64_t t, const auto& e) { return t < e.timestamp; });
        if (next == examples.end()) throw Error("split leaves one side empty");
        boundary = next->timestamp;
        first_at = next;
    }

    DatasetSplit split;
    split.split_boundary = boundary;
    split.train.assign(std::make_move_iterator(examples.begin()), std::make_move_iterator(first_at));
    split.test.assign(std::make_move_iterator(first_at), std::make_move_iterator(examples.end()));
    if (split.train.empty() || split.test.empty()) throw Error("split leaves one side empty");

    std::unordered_set<std::string> seen;
    for (const auto& e : split.train) seen.insert(normalize_query(e.query));
    for (std::size_t i = 0; i < split.test.size(); ++i)
        if (!seen.contains(normalize_query(split.test[i].query))) split.unseen_test.push_back(i);
    return split;
}

std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> holdout_tail(
    const std::vector<LabeledExample>& train, double fraction) {
    auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train.size())));
    n_val = std::min(n_val, train.size() > 0 ? train.size() - 1 : 0);
    auto cut = train.begin() + static_cast<std::ptrdiff_t>(train.size() - n_val);
    return {std::vector<LabeledExample>(train.begin(), cut), std::vector<LabeledExample>(cut, train.end())};
}

std::vector<LabeledExample> subsample(const std::vector<LabeledExample>& examples, double fraction,
                                      std::uint64_t seed) {
    if (fraction >= 1.0) return examples;
    if (!(fraction > 0.0)) throw Error("subsample fraction must be positive");
    std::vector<std::size_t> idx(examples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::round(fraction * static_cast<double>(examples.size()))));
    idx.resize(std::min(k, idx.size()));
    std::sort(idx.begin(), idx.end());
    std::vector<LabeledExample> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(examples[i]);
    return out;
}

std::vector<std::vector<std::string>> view_sequences(const std::vector<SessionEvent>& events,
                                                     std::optional<std::int64_t> before) {
    std::vector<std::vector<std::string>> out;
    std::string current;
    bool open = false;
    for (const auto& e : events) {
        if (!open || e.session_id != current) {
            current = e.session_id;
            out.emplace_back();
            open = true;
        }
        if (e.kind != EventKind::view) continue;
        if (before && e.timestamp >= *before) continue;
        out.back().push_back(*e.product_id);
    }
    std::erase_if(out, [](const auto& s) { return s.empty(); });
    return out;
}

}  // namespace facetpath
